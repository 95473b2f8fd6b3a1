#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace powersim {

// Declared type of a predictor column. Factor columns hold numeric category
// codes; downstream design matrices expand them to indicator columns.
enum class DType { numeric, factor };

// Column-oriented table of doubles with named columns. Values are immutable
// once added; the table itself is cheap to copy for schema reuse.
class DataTable {
 public:
  DataTable() = default;

  void add_column(std::string name, std::vector<double> values,
                  DType dtype = DType::numeric);

  std::size_t nrow() const { return nrow_; }
  std::size_t ncol() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t j) const { return names_.at(j); }

  // Index of a named column, or npos when absent.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t find(const std::string& name) const;

  // Throwing lookups.
  std::size_t index_of(const std::string& name) const;
  const std::vector<double>& column(std::size_t j) const { return cols_.at(j); }
  const std::vector<double>& column(const std::string& name) const;

  DType dtype(std::size_t j) const { return dtypes_.at(j); }
  DType dtype(const std::string& name) const { return dtypes_.at(index_of(name)); }
  void set_dtype(const std::string& name, DType dtype);

  double at(std::size_t i, std::size_t j) const { return cols_.at(j).at(i); }

  // New table with the same schema holding the given rows (indices may
  // repeat, as in bootstrap resampling).
  DataTable take_rows(const std::vector<std::size_t>& rows) const;

  // Empty table with this table's schema.
  DataTable empty_like() const;

 private:
  std::vector<std::string> names_;
  std::vector<DType> dtypes_;
  std::vector<std::vector<double>> cols_;
  std::size_t nrow_ = 0;
};

}  // namespace powersim
