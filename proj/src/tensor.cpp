#include "riccilab/tensor.hpp"

#include <utility>

#include "riccilab/errors.hpp"

namespace riccilab {

TensorJ partial(const TensorJ& t, const Chart& chart) {
  const int d = t.dim();
  const Jet& any = t[0];
  TensorJ out(d, t.rank() + 1, Jet(any.space(), -1));
  const std::size_t stride = t.size();
  for (int a = 0; a < d; ++a) {
    const int v = chart.jet_var(a);
    for (std::size_t i = 0; i < stride; ++i) out[a * stride + i] = t[i].d(v);
  }
  return out;
}

TensorJ difference(const TensorJ& a, const TensorJ& b) {
  assert(a.size() == b.size());
  TensorJ out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] -= b[i];
  return out;
}

TensorJ inverse(const TensorJ& m, double det_floor) {
  const int n = m.dim();
  std::vector<std::vector<Jet>> a(n, std::vector<Jet>(2 * n));
  const JetSpace& space = m(0, 0).space();
  int deg = min_degree(m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a[i][j] = m(i, j);
      a[i][n + j] = Jet::constant(space, deg, i == j ? 1.0 : 0.0);
    }
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col].value()) > std::abs(a[piv][col].value())) piv = r;
    if (piv != col) {
      std::swap(a[piv], a[col]);
      det = -det;
    }
    det *= a[col][col].value();
    if (std::abs(a[col][col].value()) < 1e-300) throw SingularMetric("zero pivot");
    const Jet inv = reciprocal(a[col][col]);
    for (int j = 0; j < 2 * n; ++j) a[col][j] = a[col][j] * inv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet f = a[r][col];
      for (int j = 0; j < 2 * n; ++j) a[r][j] -= f * a[col][j];
    }
  }
  if (std::abs(det) < det_floor) throw SingularMetric("determinant " + std::to_string(det));
  TensorJ out(n, 2, Jet(space, deg));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = a[i][n + j];
  return out;
}

Jet determinant(const TensorJ& m) {
  const int n = m.dim();
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  Jet acc(m(0, 0).space(), min_degree(m));
  for (int c = 0; c < n; ++c) {
    TensorJ minor(n - 1, 2, Jet());
    for (int i = 1; i < n; ++i) {
      int cc = 0;
      for (int j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, cc++) = m(i, j);
      }
    }
    const Jet term = m(0, c) * determinant(minor);
    if (c % 2 == 0)
      acc += term;
    else
      acc -= term;
  }
  return acc;
}

}  // namespace riccilab
