#ifndef HYDROSCALE_LATTICE_HPP
#define HYDROSCALE_LATTICE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydroscale
{

/**
 * Discrete torus T_N^d with row-major site numbering.
 *
 * Axis 0 is the slowest-varying index, so the coordinate along axis j has
 * stride N^(d-1-j). All neighbour arithmetic wraps modulo N.
 */
class Lattice
{
public:
  Lattice() = default;

  Lattice(int dim, int n) : dim_(dim), n_(n)
  {
    if (dim < 1) throw std::invalid_argument("lattice dimension must be >= 1");
    if (n < 1) throw std::invalid_argument("lattice side must be >= 1");
    strides_.assign(static_cast<std::size_t>(dim), 1);
    std::size_t s = 1;
    for (int j = dim - 1; j >= 0; --j) {
      strides_[static_cast<std::size_t>(j)] = s;
      s *= static_cast<std::size_t>(n);
    }
    sites_ = s;
  }

  int dim() const noexcept { return dim_; }
  int side() const noexcept { return n_; }
  std::size_t sites() const noexcept { return sites_; }
  std::size_t stride(int axis) const { return strides_.at(static_cast<std::size_t>(axis)); }

  int coord(std::size_t site, int axis) const
  {
    return static_cast<int>((site / stride(axis)) % static_cast<std::size_t>(n_));
  }

  std::vector<int> coords(std::size_t site) const
  {
    std::vector<int> c(static_cast<std::size_t>(dim_));
    for (int j = 0; j < dim_; ++j) c[static_cast<std::size_t>(j)] = coord(site, j);
    return c;
  }

  std::size_t index(const std::vector<int>& c) const
  {
    if (static_cast<int>(c.size()) != dim_) throw std::invalid_argument("coordinate rank mismatch");
    std::size_t s = 0;
    for (int j = 0; j < dim_; ++j) s += static_cast<std::size_t>(wrap(c[static_cast<std::size_t>(j)])) * stride(j);
    return s;
  }

  /// Site reached from `site` by `offset` steps along `axis` (periodic).
  std::size_t shift(std::size_t site, int axis, int offset) const
  {
    const int c = coord(site, axis);
    const int moved = wrap(c + offset);
    return site + (static_cast<std::size_t>(moved) - static_cast<std::size_t>(c)) * stride(axis);
  }

  int wrap(int c) const noexcept
  {
    const int r = c % n_;
    return r < 0 ? r + n_ : r;
  }

  bool operator==(const Lattice& o) const noexcept { return dim_ == o.dim_ && n_ == o.n_; }

private:
  int dim_ = 0;
  int n_ = 0;
  std::size_t sites_ = 0;
  std::vector<std::size_t> strides_;
};

/// Real-valued field over T_N^d.
struct Field
{
  Lattice lattice;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Lattice& lat, double fill = 0.0) : lattice(lat), values(lat.sites(), fill) {}
  Field(const Lattice& lat, std::vector<double> v) : lattice(lat), values(std::move(v))
  {
    if (values.size() != lattice.sites()) throw std::invalid_argument("field length does not match lattice");
  }

  int dim() const noexcept { return lattice.dim(); }
  int side() const noexcept { return lattice.side(); }
  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  /// Samples f(u) at the grid points u = x/N, with u passed as a vector of length d.
  template<typename F>
  static Field sample(const Lattice& lat, F&& f)
  {
    Field out(lat);
    std::vector<double> u(static_cast<std::size_t>(lat.dim()));
    for (std::size_t s = 0; s < lat.sites(); ++s) {
      for (int j = 0; j < lat.dim(); ++j)
        u[static_cast<std::size_t>(j)] = static_cast<double>(lat.coord(s, j)) / lat.side();
      out.values[s] = f(u);
    }
    return out;
  }
};

inline void require_same_shape(const Field& a, const Field& b, const char* what)
{
  if (!(a.lattice == b.lattice)) throw std::invalid_argument(std::string(what) + ": field shape mismatch");
}

/// Counting-measure inner product (1/N^d) sum f g.
inline double mean_product(const Field& f, const Field& g)
{
  require_same_shape(f, g, "mean_product");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.values[i] * g.values[i];
  return s / static_cast<double>(f.size());
}

inline double mean(const Field& f)
{
  return std::accumulate(f.values.begin(), f.values.end(), 0.0) / static_cast<double>(f.size());
}

inline double sup_norm(const Field& f)
{
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

/// Root of the counting-measure second moment.
inline double l2_norm(const Field& f) { return std::sqrt(mean_product(f, f)); }

inline Field operator+(Field a, const Field& b)
{
  require_same_shape(a, b, "operator+");
  for (std::size_t i = 0; i < a.size(); ++i) a.values[i] += b.values[i];
  return a;
}

inline Field operator-(Field a, const Field& b)
{
  require_same_shape(a, b, "operator-");
  for (std::size_t i = 0; i < a.size(); ++i) a.values[i] -= b.values[i];
  return a;
}

inline Field operator*(double c, Field a)
{
  for (double& v : a.values) v *= c;
  return a;
}

}  // namespace hydroscale

#endif  // HYDROSCALE_LATTICE_HPP
