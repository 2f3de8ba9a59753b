#include "sdown/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace sdown {

GridSeries::GridSeries(std::size_t rows, std::size_t cols, std::vector<std::int64_t> time_points, float fill)
    : h(rows), w(cols), times(std::move(time_points)), data(rows * cols * times.size(), fill) {}

void GridSeries::validate() const {
  if (h == 0 || w == 0) throw ShapeError("grid series: spatial dims must be >= 1");
  if (data.size() != h * w * times.size())
    throw ShapeError("grid series: payload has " + std::to_string(data.size()) + " values, expected " +
                     std::to_string(h * w * times.size()));
  for (std::size_t k = 1; k < times.size(); ++k)
    if (times[k] <= times[k - 1]) throw ShapeError("grid series: time points must be strictly increasing");
}

Grid4<float> GridSeries::as_grid() const {
  validate();
  if (times.empty()) throw ShapeError("grid series: no time steps");
  return Grid4<float>({times.size(), h, w, 1}, data);
}

GridSeries GridSeries::from_grid(const Grid4<float>& g, std::vector<std::int64_t> times) {
  if (g.c() != 1) throw ShapeError("grid series: expected a single channel, got " + g.shape().str());
  if (times.size() != g.n()) throw ShapeError("grid series: time index count does not match batch size");
  GridSeries s;
  s.h = g.h();
  s.w = g.w();
  s.times = std::move(times);
  s.data = g.vec();
  return s;
}

GridSeries GridSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > steps()) throw ShapeError("grid series: slice out of range");
  GridSeries out;
  out.h = h;
  out.w = w;
  out.times.assign(times.begin() + static_cast<std::ptrdiff_t>(first),
                   times.begin() + static_cast<std::ptrdiff_t>(first + count));
  out.data.assign(data.begin() + static_cast<std::ptrdiff_t>(first * cells()),
                  data.begin() + static_cast<std::ptrdiff_t>((first + count) * cells()));
  return out;
}

void DatasetPair::validate() const {
  coarse.validate();
  fine.validate();
  if (coarse.steps() != fine.steps())
    throw ShapeError("dataset: coarse has " + std::to_string(coarse.steps()) + " steps, fine has " +
                     std::to_string(fine.steps()));
  if (coarse.times != fine.times) throw ShapeError("dataset: coarse and fine time indices differ");
  for (std::size_t i = 1; i < coarse.times.size(); ++i)
    if (coarse.times[i] <= coarse.times[i - 1]) throw ShapeError("dataset: time points must be strictly increasing");
  if (fine.h % coarse.h != 0 || fine.w % coarse.w != 0 || fine.h / coarse.h != fine.w / coarse.w)
    throw ShapeError("dataset: fine grid " + std::to_string(fine.h) + "x" + std::to_string(fine.w) +
                     " is not an integer multiple of coarse grid " + std::to_string(coarse.h) + "x" +
                     std::to_string(coarse.w));
}

std::size_t DatasetPair::block_factor() const { return fine.h / coarse.h; }

namespace le {
namespace {
template <typename U>
void put(std::ostream& out, U v) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}
template <typename U>
U get(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw FormatError("unexpected end of file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
  return v;
}
}  // namespace
void put_u8(std::ostream& out, std::uint8_t v) { put(out, v); }
void put_u16(std::ostream& out, std::uint16_t v) { put(out, v); }
void put_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void put_i64(std::ostream& out, std::int64_t v) { put(out, static_cast<std::uint64_t>(v)); }
void put_f32(std::ostream& out, float v) { put(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::ostream& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }
std::uint8_t get_u8(std::istream& in) { return get<std::uint8_t>(in); }
std::uint16_t get_u16(std::istream& in) { return get<std::uint16_t>(in); }
std::uint32_t get_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::int64_t get_i64(std::istream& in) { return static_cast<std::int64_t>(get<std::uint64_t>(in)); }
float get_f32(std::istream& in) { return std::bit_cast<float>(get<std::uint32_t>(in)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }
}  // namespace le

void write_grid(std::ostream& out, const GridSeries& series) {
  series.validate();
  out.write(kGridMagic, 4);
  le::put_u16(out, kGridVersion);
  le::put_u32(out, static_cast<std::uint32_t>(series.h));
  le::put_u32(out, static_cast<std::uint32_t>(series.w));
  le::put_u32(out, static_cast<std::uint32_t>(series.steps()));
  for (auto t : series.times) le::put_i64(out, t);
  for (float v : series.data) le::put_f32(out, v);
}

GridSeries read_grid(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kGridMagic, 4) != 0) throw FormatError("not a grid file (bad magic)");
  const auto version = le::get_u16(in);
  if (version != kGridVersion) throw FormatError("unsupported grid file version " + std::to_string(version));
  GridSeries s;
  s.h = le::get_u32(in);
  s.w = le::get_u32(in);
  const std::size_t steps = le::get_u32(in);
  s.times.resize(steps);
  for (auto& t : s.times) t = le::get_i64(in);
  s.data.resize(s.h * s.w * steps);
  for (auto& v : s.data) v = le::get_f32(in);
  s.validate();
  return s;
}

void write_grid_file(const std::filesystem::path& path, const GridSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_grid(out, series);
  if (!out) throw FormatError("failed writing " + path.string());
}

GridSeries read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_grid(in);
}

GridSeries read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::map<std::tuple<std::int64_t, std::size_t, std::size_t>, float> cells;
  std::vector<std::int64_t> times;
  std::size_t rows = 0, cols = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    long long t = 0;
    long long r = 0, c = 0;
    std::string value;
    if (!(ss >> t >> r >> c >> value)) {
      if (line_no == 1) continue;  // header
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected t,row,col,value");
    }
    if (r < 0 || c < 0) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": negative row/col");
    float v = std::numeric_limits<float>::quiet_NaN();
    if (value != "NA" && value != "nan" && value != "NaN") v = std::stof(value);
    cells[{t, static_cast<std::size_t>(r), static_cast<std::size_t>(c)}] = v;
    times.push_back(t);
    rows = std::max(rows, static_cast<std::size_t>(r) + 1);
    cols = std::max(cols, static_cast<std::size_t>(c) + 1);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  GridSeries s(rows, cols, times, std::numeric_limits<float>::quiet_NaN());
  for (std::size_t k = 0; k < times.size(); ++k)
    for (std::size_t y = 0; y < rows; ++y)
      for (std::size_t x = 0; x < cols; ++x)
        if (auto it = cells.find({times[k], y, x}); it != cells.end()) s.at(k, y, x) = it->second;
  s.validate();
  return s;
}

GridSeries block_coarsen(const GridSeries& fine, std::size_t s) {
  fine.validate();
  if (s == 0 || fine.h % s != 0 || fine.w % s != 0)
    throw ShapeError("block_coarsen: grid " + std::to_string(fine.h) + "x" + std::to_string(fine.w) +
                     " is not divisible by block size " + std::to_string(s));
  GridSeries out(fine.h / s, fine.w / s, fine.times);
  for (std::size_t t = 0; t < fine.steps(); ++t)
    for (std::size_t y = 0; y < out.h; ++y)
      for (std::size_t x = 0; x < out.w; ++x) {
        double sum = 0;
        std::size_t count = 0;
        for (std::size_t dy = 0; dy < s; ++dy)
          for (std::size_t dx = 0; dx < s; ++dx) {
            const float v = fine.at(t, y * s + dy, x * s + dx);
            if (std::isnan(v)) continue;
            sum += v;
            ++count;
          }
        out.at(t, y, x) = count == 0 ? std::numeric_limits<float>::quiet_NaN()
                                     : static_cast<float>(sum / static_cast<double>(count));
      }
  return out;
}

std::pair<GridSeries, GridSeries> split_by_time(const GridSeries& series, std::size_t n_test) {
  if (n_test == 0 || n_test >= series.steps())
    throw ConfigError("split: n_test must satisfy 0 < n_test < " + std::to_string(series.steps()) + ", got " +
                      std::to_string(n_test));
  const std::size_t n_train = series.steps() - n_test;
  return {series.slice(0, n_train), series.slice(n_train, n_test)};
}

std::pair<DatasetPair, DatasetPair> split_by_time(const DatasetPair& data, std::size_t n_test) {
  data.validate();
  auto [ctrain, ctest] = split_by_time(data.coarse, n_test);
  auto [ftrain, ftest] = split_by_time(data.fine, n_test);
  return {DatasetPair{std::move(ctrain), std::move(ftrain), data.units},
          DatasetPair{std::move(ctest), std::move(ftest), data.units}};
}

GridSeries concat_time(const GridSeries& a, const GridSeries& b) {
  if (a.h != b.h || a.w != b.w) throw ShapeError("concat_time: spatial dims differ");
  GridSeries out = a;
  out.times.insert(out.times.end(), b.times.begin(), b.times.end());
  out.data.insert(out.data.end(), b.data.begin(), b.data.end());
  return out;
}

}  // namespace sdown
