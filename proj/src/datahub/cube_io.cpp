#include "bandsel/datahub.hpp"

#include "bandsel/errors.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace bandsel::data {

namespace {

constexpr char kMagic[8] = {'H', 'S', 'I', 'C', 'U', 'B', 'E', '1'};

static_assert(std::endian::native == std::endian::little, "cube I/O assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::span<const std::uint8_t> take(std::size_t n, const char* what)
    {
        if (remaining() < n)
            throw DataError(std::string("cube file truncated reading ") + what + " at offset " +
                            std::to_string(pos_) + " (need " + std::to_string(n) + " bytes, have " +
                            std::to_string(remaining()) + ")");
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    template <typename T>
    T get(const char* what)
    {
        T v;
        std::memcpy(&v, take(sizeof(T), what).data(), sizeof(T));
        return v;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::size_t header_dim(const nlohmann::json& h, const char* key)
{
    if (!h.contains(key) || !h[key].is_number_unsigned())
        throw DataError(std::string("cube header: '") + key + "' missing or not a non-negative integer at offset 12");
    const auto v = h[key].get<std::uint64_t>();
    if (v == 0)
        throw DataError(std::string("cube header: '") + key + "' must be positive (offset 12)");
    return std::size_t(v);
}

}  // namespace

std::vector<std::uint8_t> encode_cube(const HsiCube& cube)
{
    cube.validate();
    nlohmann::json h;
    h["rows"] = cube.rows;
    h["cols"] = cube.cols;
    h["bands"] = cube.bands;
    h["dtype"] = "f32";
    if (!cube.band_labels.empty())
        h["band_labels"] = cube.band_labels;
    h["has_gt"] = cube.has_ground_truth();
    const std::string header = h.dump();

    std::vector<std::uint8_t> out;
    out.reserve(12 + header.size() + cube.values.size() * 4 + cube.ground_truth.size() * 4);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put(out, std::uint32_t(header.size()));
    out.insert(out.end(), header.begin(), header.end());
    for (float v : cube.values)
        put(out, v);
    for (std::uint32_t l : cube.ground_truth)
        put(out, l);
    return out;
}

HsiCube decode_cube(std::span<const std::uint8_t> bytes)
{
    Reader in(bytes);
    auto magic = in.take(8, "magic");
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic)))
        throw DataError("not a cube file: bad magic at offset 0");
    const auto header_len = in.get<std::uint32_t>("header length");
    const std::size_t header_at = in.offset();
    auto header_bytes = in.take(header_len, "header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw DataError("cube header is not valid JSON at offset " + std::to_string(header_at) + ": " + e.what());
    }
    if (!h.is_object())
        throw DataError("cube header at offset " + std::to_string(header_at) + " is not a JSON object");
    if (h.value("dtype", std::string()) != "f32")
        throw DataError("cube header: unsupported dtype (expected \"f32\") at offset " + std::to_string(header_at));

    HsiCube cube;
    cube.rows = header_dim(h, "rows");
    cube.cols = header_dim(h, "cols");
    cube.bands = header_dim(h, "bands");
    const bool has_gt = h.value("has_gt", false);
    if (h.contains("band_labels"))
        cube.band_labels = h["band_labels"].get<std::vector<std::size_t>>();

    const std::size_t n = cube.rows * cube.cols * cube.bands;
    if (n / cube.bands / cube.cols != cube.rows || n > in.remaining() / 4)
        throw DataError("cube payload truncated at offset " + std::to_string(in.offset()) + ": header declares " +
                        std::to_string(cube.rows) + "x" + std::to_string(cube.cols) + "x" +
                        std::to_string(cube.bands) + " values, " + std::to_string(in.remaining()) + " bytes remain");
    auto payload = in.take(n * 4, "values");
    cube.values.resize(n);
    std::memcpy(cube.values.data(), payload.data(), n * 4);
    if (has_gt) {
        auto labels = in.take(cube.pixels() * 4, "ground truth");
        cube.ground_truth.resize(cube.pixels());
        std::memcpy(cube.ground_truth.data(), labels.data(), labels.size());
    }
    if (in.remaining() != 0)
        throw DataError("trailing bytes after cube payload at offset " + std::to_string(in.offset()));
    cube.validate();
    return cube;
}

void save_cube(const HsiCube& cube, const std::filesystem::path& path)
{
    const auto bytes = encode_cube(cube);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot open '" + path.string() + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f)
        throw DataError("write failed for '" + path.string() + "'");
}

HsiCube load_cube(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw DataError("cannot open cube file '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_cube(bytes);
}

std::vector<std::uint32_t> load_ground_truth_csv(const std::filesystem::path& path, std::size_t rows,
                                                 std::size_t cols)
{
    std::ifstream f(path);
    if (!f)
        throw DataError("cannot open ground-truth file '" + path.string() + "'");
    std::vector<std::uint32_t> labels(rows * cols, 0);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        for (char& c : line)
            if (c == ',')
                c = ' ';
        std::istringstream ls(line);
        long long r, c, l;
        if (!(ls >> r >> c >> l)) {
            if (line_no == 1)
                continue;  // header
            throw DataError("ground truth line " + std::to_string(line_no) + ": expected row,col,label");
        }
        if (r < 0 || c < 0 || l < 0 || std::size_t(r) >= rows || std::size_t(c) >= cols)
            throw DataError("ground truth line " + std::to_string(line_no) + ": entry out of range");
        labels[std::size_t(r) * cols + std::size_t(c)] = std::uint32_t(l);
    }
    return labels;
}

}  // namespace bandsel::data
