#include "pcal/snapshot.hpp"

#include "pcal/stream_io.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pcal {

namespace {

constexpr const char* kFormatName = "pcal.jumper-snapshot";

std::string canonical_text(const JumperConfig& config)
{
    std::ostringstream s;
    s << "K=" << config.classes() << ";pi=" << format_double(config.pi) << ";J=";
    for (double J : config.jump_rates)
        s << format_double(J) << ',';
    s << ";grid=";
    for (const auto& t : config.grid) {
        s << '(' << format_double(t.beta()) << ':';
        for (Eigen::Index k = 0; k < t.classes(); ++k)
            s << format_double(t.alpha()(k)) << ',';
        s << ')';
    }
    return s.str();
}

}  // namespace

std::string config_hash(const JumperConfig& config)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text(config)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string snapshot_to_string(const JumperConfig& config, const JumperState& state)
{
    nlohmann::ordered_json j;
    j["format"] = kFormatName;
    j["version"] = kSnapshotVersion;
    j["config_hash"] = config_hash(config);

    nlohmann::ordered_json cfg;
    cfg["classes"] = config.classes();
    cfg["pi"] = config.pi;
    cfg["jump_rates"] = config.jump_rates;
    nlohmann::ordered_json grid = nlohmann::ordered_json::array();
    for (const auto& t : config.grid)
        grid.push_back({{"beta", t.beta()},
                        {"alpha", std::vector<double>(t.alpha().data(),
                                                      t.alpha().data() + t.alpha().size())}});
    cfg["grid"] = std::move(grid);
    j["config"] = std::move(cfg);

    nlohmann::ordered_json st;
    st["step_count"] = state.step_count;
    st["P"] = state.P;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < state.A.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(state.A.cols()));
        for (Eigen::Index c = 0; c < state.A.cols(); ++c)
            row[static_cast<std::size_t>(c)] = state.A(r, c);
        rows.push_back(row);
    }
    st["A"] = std::move(rows);
    j["state"] = std::move(st);
    return j.dump(2) + "\n";
}

JumperState snapshot_from_string(const std::string& text, const JumperConfig& config)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("snapshot is not valid json: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormatName)
            throw std::runtime_error("not a jumper snapshot");
        if (j.at("version").get<int>() != kSnapshotVersion)
            throw std::runtime_error("unsupported snapshot version " +
                                     std::to_string(j.at("version").get<int>()));
        if (j.at("config_hash").get<std::string>() != config_hash(config))
            throw std::runtime_error("snapshot was taken under a different configuration");

        JumperState s;
        const auto& st = j.at("state");
        s.step_count = st.at("step_count").get<long>();
        s.P = st.at("P").get<double>();
        const auto& rows = st.at("A");
        const auto n_rates = static_cast<Eigen::Index>(config.jump_rates.size());
        const auto n_theta = static_cast<Eigen::Index>(config.grid.size());
        if (static_cast<Eigen::Index>(rows.size()) != n_rates)
            throw std::runtime_error("snapshot weight matrix has the wrong shape");
        s.A.resize(n_rates, n_theta);
        for (Eigen::Index r = 0; r < n_rates; ++r) {
            const auto& row = rows.at(static_cast<std::size_t>(r));
            if (static_cast<Eigen::Index>(row.size()) != n_theta)
                throw std::runtime_error("snapshot weight matrix has the wrong shape");
            for (Eigen::Index c = 0; c < n_theta; ++c)
                s.A(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
        if (s.step_count < 0 || std::abs(s.total_mass() - 1.0) > 1e-9 || s.P < 0 ||
            (s.A.array() < 0).any())
            throw std::runtime_error("snapshot state is not a valid weight distribution");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed snapshot: ") + e.what());
    }
}

void save_snapshot(const std::filesystem::path& path, const JumperConfig& config,
                   const JumperState& state)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << snapshot_to_string(config, state);
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

JumperState load_snapshot(const std::filesystem::path& path, const JumperConfig& config)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return snapshot_from_string(buf.str(), config);
}

}  // namespace pcal
