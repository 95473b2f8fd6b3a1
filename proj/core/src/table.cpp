#include "powersim/table.hpp"

#include "powersim/errors.hpp"

namespace powersim {

void DataTable::add_column(std::string name, std::vector<double> values,
                           DType dtype) {
  if (name.empty()) throw Error("table: column name must be nonempty");
  if (find(name) != npos) throw Error("table: duplicate column '" + name + "'");
  if (!names_.empty() && values.size() != nrow_)
    throw Error("table: column '" + name + "' has " +
                std::to_string(values.size()) + " rows, expected " +
                std::to_string(nrow_));
  nrow_ = values.size();
  names_.push_back(std::move(name));
  dtypes_.push_back(dtype);
  cols_.push_back(std::move(values));
}

std::size_t DataTable::find(const std::string& name) const {
  for (std::size_t j = 0; j < names_.size(); ++j)
    if (names_[j] == name) return j;
  return npos;
}

std::size_t DataTable::index_of(const std::string& name) const {
  const std::size_t j = find(name);
  if (j == npos) throw Error("table: no column named '" + name + "'");
  return j;
}

const std::vector<double>& DataTable::column(const std::string& name) const {
  return cols_[index_of(name)];
}

void DataTable::set_dtype(const std::string& name, DType dtype) {
  dtypes_[index_of(name)] = dtype;
}

DataTable DataTable::take_rows(const std::vector<std::size_t>& rows) const {
  DataTable out;
  for (std::size_t j = 0; j < ncol(); ++j) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (std::size_t i : rows) col.push_back(cols_[j].at(i));
    out.add_column(names_[j], std::move(col), dtypes_[j]);
  }
  return out;
}

DataTable DataTable::empty_like() const {
  DataTable out;
  for (std::size_t j = 0; j < ncol(); ++j)
    out.add_column(names_[j], {}, dtypes_[j]);
  return out;
}

}  // namespace powersim
