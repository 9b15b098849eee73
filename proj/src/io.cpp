#include "duffkg/kg.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace duffkg {

namespace {

constexpr std::array<char, 4> kMagic = {'K', 'G', 'F', '1'};

template <class T>
void put_le(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("snapshot: truncated input");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void write_snapshot(std::ostream& out, const Field& f) {
    const TorusGrid& g = f.grid();
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(g.points()));
    put_le<double>(out, g.side());
    put_le<std::uint64_t>(out, 0);
    for (double x : f.values()) put_le<double>(out, x);
    if (!out) throw std::runtime_error("snapshot: write failed");
}

Field read_snapshot(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw std::runtime_error("snapshot: bad magic");
    const auto d = get_le<std::uint32_t>(in);
    const auto n = get_le<std::uint64_t>(in);
    const auto L = get_le<double>(in);
    if (get_le<std::uint64_t>(in) != 0) throw std::runtime_error("snapshot: reserved header bytes are not zero");
    if (d < 1 || d > 3 || n > (1u << 20)) throw std::runtime_error("snapshot: implausible grid header");
    const TorusGrid grid(static_cast<int>(d), L, static_cast<int>(n));
    std::vector<double> values(grid.size());
    for (double& x : values) x = get_le<double>(in);
    return Field::from_values(grid, std::move(values));
}

}  // namespace duffkg
