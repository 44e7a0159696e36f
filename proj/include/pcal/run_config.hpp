#ifndef PCAL_RUN_CONFIG_HPP
#define PCAL_RUN_CONFIG_HPP

// Plain key-value configuration files:
//
//   # comment
//   pi = 0.5
//   jump_rates = 0.01, 0.001, 0.0001
//   alpha_magnitudes =            (empty list)
//
// Unknown keys are an error so typos surface.

#include "pcal/jumper.hpp"
#include "pcal/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace pcal {

struct RunConfig {
    JumperParams jumper;
    double clamp_epsilon = 1e-6;
    int ece_bins = 15;
    EceNorm ece_norm = EceNorm::l2;
    std::uint64_t seed = 0;

    void validate() const;
    JumperConfig jumper_config(Eigen::Index classes) const { return jumper.for_classes(classes); }
};

std::string_view to_string(EceNorm norm);
EceNorm parse_ece_norm(std::string_view name);

class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in);
    static KeyValueFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    /// Each accessor marks its key as consumed.
    std::string string(const std::string& key, const std::string& fallback);
    double number(const std::string& key, double fallback);
    long integer(const std::string& key, long fallback);
    bool flag(const std::string& key, bool fallback);
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
    std::vector<std::string> strings(const std::string& key,
                                     const std::vector<std::string>& fallback);

    /// Throws if any key was never consumed.
    void finish() const;

private:
    const std::string* find(const std::string& key);

    std::map<std::string, std::string> values_;
    std::map<std::string, std::size_t> lines_;
    std::set<std::string> consumed_;
};

/// Reads the RunConfig keys (pi, jump_rates, betas, alpha_magnitudes,
/// clamp_epsilon, ece_bins, ece_norm, seed), leaving other keys unconsumed.
RunConfig read_run_config(KeyValueFile& file, RunConfig defaults = {});

}  // namespace pcal

#endif  // PCAL_RUN_CONFIG_HPP
