#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sdown/grid.hpp"

namespace sdown {

// Single-variable gridded sequence, time-major then row-major. NaN = missing.
struct GridSeries {
  std::size_t h = 0, w = 0;
  std::vector<std::int64_t> times;
  std::vector<float> data;

  GridSeries() = default;
  GridSeries(std::size_t rows, std::size_t cols, std::vector<std::int64_t> time_points, float fill = 0.0f);

  std::size_t steps() const { return times.size(); }
  std::size_t cells() const { return h * w; }
  float& at(std::size_t t, std::size_t y, std::size_t x) { return data[(t * h + y) * w + x]; }
  float at(std::size_t t, std::size_t y, std::size_t x) const { return data[(t * h + y) * w + x]; }

  void validate() const;
  // (steps, h, w, 1)
  Grid4<float> as_grid() const;
  static GridSeries from_grid(const Grid4<float>& g, std::vector<std::int64_t> times);
  GridSeries slice(std::size_t first, std::size_t count) const;
  std::vector<double> time_points() const { return {times.begin(), times.end()}; }
};

// Aligned coarse/fine sequences: fine dims are an integer multiple of coarse dims.
struct DatasetPair {
  GridSeries coarse;
  GridSeries fine;
  std::string units;

  void validate() const;
  std::size_t block_factor() const;
  std::size_t steps() const { return coarse.steps(); }
};

// GridFile layout (little-endian):
//   "SDG1" | u16 version (=1) | u32 h | u32 w | u32 steps | i64 times[steps] | f32 data[steps*h*w]
inline constexpr char kGridMagic[4] = {'S', 'D', 'G', '1'};
inline constexpr std::uint16_t kGridVersion = 1;

void write_grid(std::ostream& out, const GridSeries& series);
GridSeries read_grid(std::istream& in);
void write_grid_file(const std::filesystem::path& path, const GridSeries& series);
GridSeries read_grid_file(const std::filesystem::path& path);

// Rows `t,row,col,value` (optional header). Dims come from the largest row/col
// index; cells absent from the file are NaN.
GridSeries read_grid_csv(const std::filesystem::path& path);

// Mean of each non-overlapping s x s block over its finite members (all-NaN -> NaN).
GridSeries block_coarsen(const GridSeries& fine, std::size_t s);

// Contiguous tail split: the last n_test steps become the test part.
std::pair<GridSeries, GridSeries> split_by_time(const GridSeries& series, std::size_t n_test);
std::pair<DatasetPair, DatasetPair> split_by_time(const DatasetPair& data, std::size_t n_test);

GridSeries concat_time(const GridSeries& a, const GridSeries& b);

// Little-endian primitive IO shared with the model container.
namespace le {
void put_u8(std::ostream& out, std::uint8_t v);
void put_u16(std::ostream& out, std::uint16_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_i64(std::ostream& out, std::int64_t v);
void put_f32(std::ostream& out, float v);
void put_f64(std::ostream& out, double v);
std::uint8_t get_u8(std::istream& in);
std::uint16_t get_u16(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::int64_t get_i64(std::istream& in);
float get_f32(std::istream& in);
double get_f64(std::istream& in);
}  // namespace le

}  // namespace sdown
