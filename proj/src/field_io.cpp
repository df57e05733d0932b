#include "gw/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

namespace gw {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary layout assumes a little-endian host");

constexpr char kMagic[4] = {'G', 'W', 'F', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void put_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void put_modes(std::ostream& os, const ModeArray& f) {
    for (const Complex& c : f) {
        put_f64(os, c.real());
        put_f64(os, c.imag());
    }
}

void get_modes(std::istream& is, ModeArray& f) {
    for (Complex& c : f) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        c = Complex(re, im);
    }
}

} // namespace

void write_state_binary(std::ostream& os, const SystemState& state) {
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(state.field.m_grid));
    put_u32(os, static_cast<std::uint32_t>(state.r.size()));
    put_modes(os, state.field.phi_hat);
    put_modes(os, state.field.pi_hat);
    for (double rj : state.r) put_f64(os, rj);
}

SystemState read_state_binary(std::istream& is) {
    char magic[4] = {0, 0, 0, 0};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_state_binary: bad magic (not a GWF1 record)");
    const int m_grid = static_cast<int>(get_u32(is));
    const int K = static_cast<int>(get_u32(is));
    if (m_grid < 0 || m_grid > (1 << 20) || K < 0 || K > (1 << 20))
        throw std::runtime_error("read_state_binary: implausible header");
    SystemState s = SystemState::zero(m_grid, K);
    get_modes(is, s.field.phi_hat);
    get_modes(is, s.field.pi_hat);
    for (double& rj : s.r) rj = get_f64(is);
    if (!is) throw std::runtime_error("read_state_binary: truncated record");
    return s;
}

nlohmann::json state_to_json(const SystemState& state) {
    nlohmann::json j;
    j["m_grid"] = state.field.m_grid;
    j["K"] = state.r.size();
    auto modes_json = [](const ModeArray& f) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Complex& c : f) arr.push_back({c.real(), c.imag()});
        return arr;
    };
    j["phi_hat"] = modes_json(state.field.phi_hat);
    j["pi_hat"] = modes_json(state.field.pi_hat);
    j["r"] = state.r;
    return j;
}

SystemState state_from_json(const nlohmann::json& j) {
    const int m_grid = j.at("m_grid").get<int>();
    const int K = j.at("K").get<int>();
    SystemState s = SystemState::zero(m_grid, K);
    auto read_modes = [](const nlohmann::json& arr, ModeArray& f) {
        if (arr.size() != f.size())
            throw std::runtime_error("state_from_json: coefficient count mismatch");
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = Complex(arr[i][0].get<double>(), arr[i][1].get<double>());
    };
    read_modes(j.at("phi_hat"), s.field.phi_hat);
    read_modes(j.at("pi_hat"), s.field.pi_hat);
    const auto& r = j.at("r");
    if (static_cast<int>(r.size()) != K)
        throw std::runtime_error("state_from_json: reservoir count mismatch");
    for (int i = 0; i < K; ++i) s.r[static_cast<std::size_t>(i)] = r[i].get<double>();
    return s;
}

void write_sample_dump(const std::string& directory,
                       const std::vector<SystemState>& states,
                       const nlohmann::json& manifest_extra) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    {
        std::ofstream bin(fs::path(directory) / "samples.bin", std::ios::binary);
        if (!bin) throw std::runtime_error("write_sample_dump: cannot open samples.bin");
        for (const SystemState& s : states) write_state_binary(bin, s);
    }
    nlohmann::json manifest = manifest_extra;
    manifest["count"] = states.size();
    manifest["format"] = "GWF1";
    std::ofstream mf(fs::path(directory) / "manifest.json");
    mf << manifest.dump(2) << "\n";
}

std::vector<SystemState> read_sample_dump(const std::string& directory) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(directory) / "manifest.json");
    if (!mf) throw std::runtime_error("read_sample_dump: missing manifest.json");
    nlohmann::json manifest = nlohmann::json::parse(mf);
    const std::size_t count = manifest.at("count").get<std::size_t>();
    std::ifstream bin(fs::path(directory) / "samples.bin", std::ios::binary);
    if (!bin) throw std::runtime_error("read_sample_dump: missing samples.bin");
    std::vector<SystemState> states;
    states.reserve(count);
    for (std::size_t i = 0; i < count; ++i) states.push_back(read_state_binary(bin));
    return states;
}

} // namespace gw
