#include "pcal/stream_io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace pcal {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_csv(const std::string& line, std::size_t line_no)
{
    if (line.find('"') != std::string::npos)
        throw ParseError(line_no, "quoted csv fields are not supported");
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

double parse_number(const std::string& text, std::size_t line_no, const std::string& what)
{
    double v = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ')
        ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r'))
        --last;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last)
        throw ParseError(line_no, "cannot parse " + what + " '" + text + "'");
    return v;
}

int parse_label(double v, std::size_t line_no)
{
    if (v != std::floor(v))
        throw ParseError(line_no, "label must be an integer");
    return static_cast<int>(v);
}

void add_record(LabeledStream& stream, Eigen::VectorXd raw, double y_value,
                std::optional<std::string> id, double eps, std::size_t line_no)
{
    if (stream.records.empty()) {
        if (raw.size() < 2)
            throw ParseError(line_no, "records need at least 2 class probabilities");
        stream.classes = raw.size();
    } else if (raw.size() != stream.classes) {
        throw ParseError(line_no, "record has " + std::to_string(raw.size()) +
                                      " classes, stream started with " +
                                      std::to_string(stream.classes));
    }
    const int y = parse_label(y_value, line_no);
    if (y < 0 || y >= stream.classes)
        throw ParseError(line_no, "label " + std::to_string(y) + " outside [0, " +
                                      std::to_string(stream.classes) + ")");
    try {
        stream.records.push_back({clamp_renormalize<double>(raw, eps), y, std::move(id)});
    } catch (const std::invalid_argument& e) {
        throw ParseError(line_no, e.what());
    }
}

LabeledStream parse_jsonl(std::istream& in, double eps)
{
    LabeledStream stream;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("malformed json: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("p") || !obj.contains("y") || !obj["p"].is_array() ||
            !obj["y"].is_number())
            throw ParseError(line_no, "record needs an array field 'p' and a numeric field 'y'");
        const auto& p = obj["p"];
        Eigen::VectorXd raw(static_cast<Eigen::Index>(p.size()));
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (!p[k].is_number())
                throw ParseError(line_no, "probability entries must be numbers");
            raw(static_cast<Eigen::Index>(k)) = p[k].get<double>();
        }
        std::optional<std::string> id;
        if (obj.contains("id"))
            id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
        add_record(stream, std::move(raw), obj["y"].get<double>(), std::move(id), eps, line_no);
    }
    return stream;
}

LabeledStream parse_csv(std::istream& in, double eps)
{
    LabeledStream stream;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos)
            break;
    }
    if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos)
        return stream;

    // Header: p_<k> columns, y, optional id; other columns are ignored.
    const auto header = split_csv(line, line_no);
    std::unordered_map<int, std::size_t> p_cols;
    std::optional<std::size_t> y_col, id_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string name = header[c];
        while (!name.empty() && (name.back() == '\r' || name.back() == ' '))
            name.pop_back();
        while (!name.empty() && name.front() == ' ')
            name.erase(name.begin());
        if (name == "y") {
            y_col = c;
        } else if (name == "id") {
            id_col = c;
        } else if (name.size() > 2 && name.rfind("p_", 0) == 0) {
            int k = 0;
            const auto [ptr, ec] = std::from_chars(name.data() + 2, name.data() + name.size(), k);
            if (ec == std::errc() && ptr == name.data() + name.size() && k >= 0) {
                if (p_cols.count(k))
                    throw ParseError(line_no, "duplicate column " + name);
                p_cols[k] = c;
            }
        }
    }
    if (!y_col)
        throw ParseError(line_no, "csv header lacks a 'y' column");
    const int K = static_cast<int>(p_cols.size());
    for (int k = 0; k < K; ++k)
        if (!p_cols.count(k))
            throw ParseError(line_no, "csv header lacks column p_" + std::to_string(k));

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto fields = split_csv(line, line_no);
        if (fields.size() != header.size())
            throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                          " fields, found " + std::to_string(fields.size()));
        Eigen::VectorXd raw(K);
        for (int k = 0; k < K; ++k)
            raw(k) = parse_number(fields[p_cols[k]], line_no, "probability");
        std::optional<std::string> id;
        if (id_col)
            id = fields[*id_col];
        add_record(stream, std::move(raw), parse_number(fields[*y_col], line_no, "label"),
                   std::move(id), eps, line_no);
    }
    return stream;
}

void write_csv_header(std::ostream& out, bool with_id, Eigen::Index K)
{
    if (with_id)
        out << "id,";
    for (Eigen::Index k = 0; k < K; ++k)
        out << "p_" << k << ',';
    out << 'y';
}

const std::string& csv_id(const StreamRecord& r)
{
    static const std::string empty;
    if (!r.id)
        return empty;
    if (r.id->find_first_of(",\"\r\n") != std::string::npos)
        throw std::invalid_argument("id '" + *r.id + "' cannot be written to csv without quoting");
    return *r.id;
}

bool any_id(const LabeledStream& stream)
{
    for (const auto& r : stream.records)
        if (r.id)
            return true;
    return false;
}

ordered_json record_json(const StreamRecord& r)
{
    ordered_json j;
    if (r.id)
        j["id"] = *r.id;
    j["p"] = r.p.to_std();
    j["y"] = r.y;
    return j;
}

}  // namespace

StreamFormat format_for(const std::filesystem::path& path)
{
    return path.extension() == ".csv" ? StreamFormat::csv : StreamFormat::jsonl;
}

std::vector<ProbVector> LabeledStream::probs() const
{
    std::vector<ProbVector> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(r.p);
    return out;
}

std::vector<int> LabeledStream::labels() const
{
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(r.y);
    return out;
}

LabeledStream parse_stream(std::istream& in, StreamFormat format, double clamp_epsilon)
{
    return format == StreamFormat::csv ? parse_csv(in, clamp_epsilon)
                                       : parse_jsonl(in, clamp_epsilon);
}

LabeledStream parse_stream(const std::filesystem::path& path, StreamFormat format,
                           double clamp_epsilon)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return parse_stream(in, format, clamp_epsilon);
}

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

void emit_stream(std::ostream& out, const LabeledStream& stream, StreamFormat format)
{
    if (format == StreamFormat::jsonl) {
        for (const auto& r : stream.records)
            out << record_json(r).dump() << '\n';
        return;
    }
    const bool with_id = any_id(stream);
    write_csv_header(out, with_id, stream.classes);
    out << '\n';
    for (const auto& r : stream.records) {
        if (with_id)
            out << csv_id(r) << ',';
        for (Eigen::Index k = 0; k < r.p.size(); ++k)
            out << format_double(r.p(k)) << ',';
        out << r.y << '\n';
    }
}

void emit_protected(std::ostream& out, const LabeledStream& stream,
                    const std::vector<StepOutcome>& outcomes, StreamFormat format,
                    const std::vector<StepWeights>* weights)
{
    if (outcomes.size() != stream.size() || (weights && weights->size() != stream.size()))
        throw std::invalid_argument("emit_protected: output length does not match the stream");

    if (format == StreamFormat::jsonl) {
        for (std::size_t i = 0; i < stream.size(); ++i) {
            ordered_json j = record_json(stream.records[i]);
            j["p_protected"] = outcomes[i].protected_p.to_std();
            if (weights) {
                const auto& w = (*weights)[i];
                j["base_weight"] = w.base_weight;
                j["theta_weights"] = std::vector<double>(w.theta_weights.data(),
                                                         w.theta_weights.data() + w.theta_weights.size());
            }
            out << j.dump() << '\n';
        }
        return;
    }

    const bool with_id = any_id(stream);
    write_csv_header(out, with_id, stream.classes);
    for (Eigen::Index k = 0; k < stream.classes; ++k)
        out << ",p_protected_" << k;
    if (weights && !weights->empty()) {
        out << ",base_weight";
        for (Eigen::Index t = 0; t < weights->front().theta_weights.size(); ++t)
            out << ",theta_weight_" << t;
    }
    out << '\n';
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto& r = stream.records[i];
        if (with_id)
            out << csv_id(r) << ',';
        for (Eigen::Index k = 0; k < r.p.size(); ++k)
            out << format_double(r.p(k)) << ',';
        out << r.y;
        for (Eigen::Index k = 0; k < r.p.size(); ++k)
            out << ',' << format_double(outcomes[i].protected_p(k));
        if (weights) {
            const auto& w = (*weights)[i];
            out << ',' << format_double(w.base_weight);
            for (Eigen::Index t = 0; t < w.theta_weights.size(); ++t)
                out << ',' << format_double(w.theta_weights(t));
        }
        out << '\n';
    }
}

}  // namespace pcal
