#include "akpz/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "akpz/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "field checkpoints are little-endian; add byte swapping for this target");

namespace akpz {

namespace {

constexpr char kMagic[8] = {'A', 'K', 'P', 'Z', 'F', 'L', 'D', '1'};
constexpr std::uint32_t kLayoutVersion = 1;

template <class T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("field checkpoint: truncated stream");
    return v;
}

}  // namespace

void write_field_binary(std::ostream& os, const FourierField& f) {
    os.write(kMagic, sizeof(kMagic));
    write_raw(os, kLayoutVersion);
    write_raw(os, std::int32_t(f.cutoff()));
    write_raw(os, f.zero_mode());
    for (std::size_t i = 0; i < f.half_count(); ++i) {
        write_raw(os, f.half_entry(i).real());
        write_raw(os, f.half_entry(i).imag());
    }
    if (!os) throw IoError("field checkpoint: write failed");
}

FourierField read_field_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("field checkpoint: bad magic");
    auto version = read_raw<std::uint32_t>(is);
    if (version != kLayoutVersion) throw IoError("field checkpoint: unsupported layout version");
    auto m = read_raw<std::int32_t>(is);
    if (m < 0 || m > (1 << 20)) throw IoError("field checkpoint: implausible cutoff");
    FourierField f(m);
    f.set_zero_mode(read_raw<double>(is));
    for (std::size_t i = 0; i < f.half_count(); ++i) {
        double re = read_raw<double>(is);
        double im = read_raw<double>(is);
        f.set_half_entry(i, Complex{re, im});
    }
    return f;
}

void save_field(const std::string& path, const FourierField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_field_binary(os, f);
}

FourierField load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return read_field_binary(is);
}

std::string field_to_json(const FourierField& f) {
    nlohmann::json j;
    j["cutoff"] = f.cutoff();
    j["zero_mode"] = f.zero_mode();
    auto coeffs = nlohmann::json::array();
    f.for_each_canonical([&](Wavenumber k, Complex v) {
        if (v != Complex{0.0, 0.0})
            coeffs.push_back({k.k1, k.k2, v.real(), v.imag()});
    });
    j["coeffs"] = std::move(coeffs);
    return j.dump();
}

FourierField field_from_json(const std::string& json) {
    auto j = nlohmann::json::parse(json);
    FourierField f(j.at("cutoff").get<int>());
    f.set_zero_mode(j.at("zero_mode").get<double>());
    for (const auto& row : j.at("coeffs")) {
        Wavenumber k{row.at(0).get<int>(), row.at(1).get<int>()};
        f.set_coeff(k, Complex{row.at(2).get<double>(), row.at(3).get<double>()});
    }
    return f;
}

}  // namespace akpz
