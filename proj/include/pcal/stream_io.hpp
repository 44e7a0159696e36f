#ifndef PCAL_STREAM_IO_HPP
#define PCAL_STREAM_IO_HPP

// Labeled prediction streams on disk.
//
//   jsonl: one object per line, {"id": "...", "p": [p_0, ..., p_{K-1}], "y": k}
//          ("id" optional)
//   csv:   header naming p_0..p_{K-1} and y (optionally id), one record per row
//
// Probabilities are clamped to [eps, 1 - eps] and renormalized on the way in.

#include "pcal/jumper.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcal {

enum class StreamFormat { jsonl, csv };

/// ".csv" selects csv, anything else jsonl.
StreamFormat format_for(const std::filesystem::path& path);

struct StreamRecord {
    ProbVector p;
    int y = 0;
    std::optional<std::string> id;
};

struct LabeledStream {
    Eigen::Index classes = 0;
    std::vector<StreamRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    std::vector<ProbVector> probs() const;
    std::vector<int> labels() const;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

LabeledStream parse_stream(std::istream& in, StreamFormat format, double clamp_epsilon = 1e-6);
LabeledStream parse_stream(const std::filesystem::path& path, StreamFormat format,
                           double clamp_epsilon = 1e-6);

void emit_stream(std::ostream& out, const LabeledStream& stream, StreamFormat format);

/// Per-step protected output: each input record plus p_protected, and when
/// `weights` is given, the base weight and per-calibrator weights after the
/// step's update.
struct StepWeights {
    double base_weight;
    Eigen::VectorXd theta_weights;
};

void emit_protected(std::ostream& out, const LabeledStream& stream,
                    const std::vector<StepOutcome>& outcomes, StreamFormat format,
                    const std::vector<StepWeights>* weights = nullptr);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace pcal

#endif  // PCAL_STREAM_IO_HPP
