#include "lmfg/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "lmfg/errors.hpp"

namespace lmfg {

static_assert(std::endian::native == std::endian::little,
              "field I/O writes host order and assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'M', 'F', 'G'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error(ErrorKind::invalid_argument, "field record truncated");
    return v;
}

}  // namespace

void write_field(std::ostream& os, const Field& f) {
    const Grid& g = f.grid();
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(g.dims()));
    for (int a = 0; a < g.dims(); ++a) put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n(a)));
    for (int a = 0; a < g.dims(); ++a) put<double>(os, g.half_width(a));
    os.write(reinterpret_cast<const char*>(f.data().data()),
             static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!os) throw Error(ErrorKind::invalid_argument, "field write failed");
}

Field read_field(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw Error(ErrorKind::invalid_argument, "field record: bad magic");
    if (get<std::uint32_t>(is) != kVersion)
        throw Error(ErrorKind::unsupported, "field record: unsupported version");
    const int dims = get<std::uint8_t>(is);
    require(dims == 1 || dims == 2, "field record: dims must be 1 or 2");
    std::array<int, 2> n{1, 1};
    std::array<double, 2> L{0.0, 0.0};
    for (int a = 0; a < dims; ++a) n[a] = static_cast<int>(get<std::uint32_t>(is));
    for (int a = 0; a < dims; ++a) L[a] = get<double>(is);
    const Grid g = dims == 1 ? Grid(n[0], L[0]) : Grid(n, L);
    std::vector<double> values(g.size());
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw Error(ErrorKind::invalid_argument, "field record truncated");
    return Field(g, std::move(values));
}

void write_field_file(const std::string& path, const Field& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::invalid_argument, "cannot open " + path + " for writing");
    write_field(os, f);
}

Field read_field_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::invalid_argument, "cannot open " + path);
    return read_field(is);
}

void write_fields_file(const std::string& path, const std::vector<Field>& fields) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::invalid_argument, "cannot open " + path + " for writing");
    for (const auto& f : fields) write_field(os, f);
}

std::vector<Field> read_fields_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::invalid_argument, "cannot open " + path);
    std::vector<Field> out;
    while (is.peek() != std::char_traits<char>::eof()) out.push_back(read_field(is));
    return out;
}

}  // namespace lmfg
