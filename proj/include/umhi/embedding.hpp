#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "umhi/graph.hpp"

namespace umhi {

// Dense id -> fixed-dimension real vector. Backing store is one contiguous
// row-major buffer.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t count, std::size_t dim)
      : count_(count), dim_(dim), data_(count * dim, 0.0) {}

  std::size_t count() const { return count_; }
  std::size_t dim() const { return dim_; }

  double* row(std::size_t id) { return data_.data() + id * dim_; }
  const double* row(std::size_t id) const { return data_.data() + id * dim_; }

  std::vector<double> vec(std::size_t id) const {
    return {row(id), row(id) + dim_};
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const EmbeddingTable& o) const {
    return count_ == o.count_ && dim_ == o.dim_ && data_ == o.data_;
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  // Text format: first line "count dim", then one line per id:
  // "id v1 v2 ... v_dim".
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embedding file: " + path);
    out << count_ << ' ' << dim_ << '\n';
    out << std::setprecision(17);
    for (std::size_t id = 0; id < count_; ++id) {
      out << id;
      const double* r = row(id);
      for (std::size_t d = 0; d < dim_; ++d) out << ' ' << r[d];
      out << '\n';
    }
    if (!out) throw DataError("write failure on embedding file: " + path);
  }

  static EmbeddingTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing embedding file: " + path);
    std::size_t count = 0, dim = 0;
    if (!(in >> count >> dim)) throw DataError("bad embedding header: " + path);
    EmbeddingTable table(count, dim);
    for (std::size_t k = 0; k < count; ++k) {
      std::size_t id = 0;
      if (!(in >> id) || id >= count)
        throw DataError("bad embedding row in " + path);
      double* r = table.row(id);
      for (std::size_t d = 0; d < dim; ++d) {
        if (!(in >> r[d])) throw DataError("truncated embedding row in " + path);
      }
    }
    return table;
  }

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

inline double cosine(const double* a, const double* b, std::size_t dim) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    dot += a[d] * b[d];
    na += a[d] * a[d];
    nb += b[d] * b[d];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double cosine(const EmbeddingTable& t, std::size_t i, std::size_t j) {
  return cosine(t.row(i), t.row(j), t.dim());
}

}  // namespace umhi
