#include "pcal/run_config.hpp"

#include "pcal/stream_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace pcal {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& text, const std::string& key)
{
    double v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw std::invalid_argument("config key '" + key + "': cannot parse number '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

}  // namespace

void RunConfig::validate() const
{
    if (!(clamp_epsilon > 0 && clamp_epsilon <= 0.01))
        throw std::invalid_argument("clamp_epsilon must lie in (0, 0.01]");
    if (ece_bins < 1)
        throw std::invalid_argument("ece_bins must be at least 1");
    jumper.for_classes(2);
}

std::string_view to_string(EceNorm norm) { return norm == EceNorm::l1 ? "l1" : "l2"; }

EceNorm parse_ece_norm(std::string_view name)
{
    if (name == "l1")
        return EceNorm::l1;
    if (name == "l2")
        return EceNorm::l2;
    throw std::invalid_argument("ece_norm must be l1 or l2");
}

KeyValueFile KeyValueFile::parse(std::istream& in)
{
    KeyValueFile f;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ParseError(line_no, "empty key");
        if (f.values_.count(key))
            throw ParseError(line_no, "duplicate key '" + key + "'");
        f.values_[key] = trim(line.substr(eq + 1));
        f.lines_[key] = line_no;
    }
    return f;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return parse(in);
}

const std::string* KeyValueFile::find(const std::string& key)
{
    const auto it = values_.find(key);
    if (it == values_.end())
        return nullptr;
    consumed_.insert(key);
    return &it->second;
}

std::string KeyValueFile::string(const std::string& key, const std::string& fallback)
{
    const auto* v = find(key);
    return v ? *v : fallback;
}

double KeyValueFile::number(const std::string& key, double fallback)
{
    const auto* v = find(key);
    return v ? to_double(*v, key) : fallback;
}

long KeyValueFile::integer(const std::string& key, long fallback)
{
    const auto* v = find(key);
    if (!v)
        return fallback;
    long out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
        throw std::invalid_argument("config key '" + key + "': cannot parse integer '" + *v + "'");
    return out;
}

bool KeyValueFile::flag(const std::string& key, bool fallback)
{
    const auto* v = find(key);
    if (!v)
        return fallback;
    if (*v == "true" || *v == "1" || *v == "yes")
        return true;
    if (*v == "false" || *v == "0" || *v == "no")
        return false;
    throw std::invalid_argument("config key '" + key + "': expected true or false");
}

std::vector<double> KeyValueFile::numbers(const std::string& key,
                                          const std::vector<double>& fallback)
{
    const auto* v = find(key);
    if (!v)
        return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(*v))
        out.push_back(to_double(item, key));
    return out;
}

std::vector<std::string> KeyValueFile::strings(const std::string& key,
                                               const std::vector<std::string>& fallback)
{
    const auto* v = find(key);
    return v ? split_list(*v) : fallback;
}

void KeyValueFile::finish() const
{
    for (const auto& [key, value] : values_)
        if (!consumed_.count(key))
            throw ParseError(lines_.at(key), "unknown config key '" + key + "'");
}

RunConfig read_run_config(KeyValueFile& file, RunConfig c)
{
    c.jumper.pi = file.number("pi", c.jumper.pi);
    c.jumper.jump_rates = file.numbers("jump_rates", c.jumper.jump_rates);
    c.jumper.betas = file.numbers("betas", c.jumper.betas);
    c.jumper.alpha_magnitudes = file.numbers("alpha_magnitudes", c.jumper.alpha_magnitudes);
    c.clamp_epsilon = file.number("clamp_epsilon", c.clamp_epsilon);
    c.ece_bins = static_cast<int>(file.integer("ece_bins", c.ece_bins));
    c.ece_norm = parse_ece_norm(file.string("ece_norm", std::string(to_string(c.ece_norm))));
    c.seed = static_cast<std::uint64_t>(file.integer("seed", static_cast<long>(c.seed)));
    c.validate();
    return c;
}

}  // namespace pcal
