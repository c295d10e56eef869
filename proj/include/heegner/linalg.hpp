#pragma once

#include <algorithm>
#include <vector>

#include "arith.hpp"

namespace heegner {

using IVec = std::vector<Int>;
using QVec = std::vector<Rat>;
using IMat = std::vector<IVec>;  // row-major; lattice bases are rows
using QMat = std::vector<QVec>;

inline IMat identity_imat(size_t n) {
  IMat m(n, IVec(n, 0));
  for (size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

inline IMat mul(const IMat& a, const IMat& b) {
  size_t n = a.size(), k = b.size(), m = k ? b[0].size() : 0;
  IMat c(n, IVec(m, 0));
  for (size_t i = 0; i < n; ++i)
    for (size_t l = 0; l < k; ++l) {
      if (a[i][l] == 0) continue;
      for (size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
    }
  return c;
}

inline IMat transpose(const IMat& a) {
  if (a.empty()) return {};
  IMat t(a[0].size(), IVec(a.size()));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

/// Row Hermite normal form: nonzero rows only, pivots positive, entries above
/// each pivot reduced into [0, pivot).
inline IMat hnf(IMat a) {
  if (a.empty()) return a;
  size_t rows = a.size(), cols = a[0].size();
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    // Euclid on column c among rows r..end
    while (true) {
      size_t best = rows;
      for (size_t i = r; i < rows; ++i)
        if (a[i][c] != 0 && (best == rows || abs(a[i][c]) < abs(a[best][c]))) best = i;
      if (best == rows) break;
      std::swap(a[r], a[best]);
      bool done = true;
      for (size_t i = r + 1; i < rows; ++i) {
        if (a[i][c] == 0) continue;
        Int q = floor_div(a[i][c], a[r][c]);
        for (size_t j = c; j < cols; ++j) a[i][j] -= q * a[r][j];
        if (a[i][c] != 0) done = false;
      }
      if (done) break;
    }
    if (a[r][c] == 0) continue;
    if (a[r][c] < 0)
      for (size_t j = c; j < cols; ++j) a[r][j] = -a[r][j];
    for (size_t i = 0; i < r; ++i) {
      Int q = floor_div(a[i][c], a[r][c]);
      if (q != 0)
        for (size_t j = c; j < cols; ++j) a[i][j] -= q * a[r][j];
    }
    ++r;
  }
  a.resize(r);
  return a;
}

/// Integer left kernel of a (rows x cols): basis (HNF) of {x : x a = 0}.
inline IMat left_kernel(const IMat& a) {
  size_t rows = a.size();
  if (rows == 0) return {};
  size_t cols = a[0].size();
  IMat aug(rows, IVec(cols + rows, 0));
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) aug[i][j] = a[i][j];
    aug[i][cols + i] = 1;
  }
  // Column echelon on the first block, tracked in the identity block.
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    while (true) {
      size_t best = rows;
      for (size_t i = r; i < rows; ++i)
        if (aug[i][c] != 0 && (best == rows || abs(aug[i][c]) < abs(aug[best][c]))) best = i;
      if (best == rows) break;
      std::swap(aug[r], aug[best]);
      bool done = true;
      for (size_t i = r + 1; i < rows; ++i) {
        if (aug[i][c] == 0) continue;
        Int q = floor_div(aug[i][c], aug[r][c]);
        for (size_t j = c; j < cols + rows; ++j) aug[i][j] -= q * aug[r][j];
        if (aug[i][c] != 0) done = false;
      }
      if (done) break;
    }
    if (aug[r][c] != 0) ++r;
  }
  IMat ker;
  for (size_t i = r; i < rows; ++i) ker.emplace_back(aug[i].begin() + cols, aug[i].end());
  return hnf(ker);
}

inline Rat det(QMat a) {
  size_t n = a.size();
  Rat d = 1;
  for (size_t c = 0; c < n; ++c) {
    size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) return 0;
    if (p != c) {
      std::swap(a[p], a[c]);
      d = -d;
    }
    d *= a[c][c];
    for (size_t i = c + 1; i < n; ++i) {
      if (a[i][c] == 0) continue;
      Rat f = a[i][c] / a[c][c];
      for (size_t j = c; j < n; ++j) a[i][j] -= f * a[c][j];
    }
  }
  return d;
}

inline Int det(const IMat& a) {
  QMat q(a.size());
  for (size_t i = 0; i < a.size(); ++i) q[i] = QVec(a[i].begin(), a[i].end());
  return Int(det(q).get_num());
}

/// Inverse of a square rational matrix; throws if singular.
inline QMat inverse(const QMat& a0) {
  size_t n = a0.size();
  QMat a = a0, inv(n, QVec(n, 0));
  for (size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (size_t c = 0; c < n; ++c) {
    size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) throw Error("linalg", "singular matrix");
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    Rat f = 1 / a[c][c];
    for (size_t j = 0; j < n; ++j) {
      a[c][j] *= f;
      inv[c][j] *= f;
    }
    for (size_t i = 0; i < n; ++i) {
      if (i == c || a[i][c] == 0) continue;
      Rat g = a[i][c];
      for (size_t j = 0; j < n; ++j) {
        a[i][j] -= g * a[c][j];
        inv[i][j] -= g * inv[c][j];
      }
    }
  }
  return inv;
}

/// Smith normal form with transforms: u * a * v = diag(d), u and v unimodular.
struct Smith {
  IMat u, v;
  IVec d;  // diagonal, length min(rows, cols), d[i] | d[i+1], nonnegative
};

inline Smith smith(const IMat& a0) {
  size_t rows = a0.size(), cols = rows ? a0[0].size() : 0;
  IMat a = a0, u = identity_imat(rows), v = identity_imat(cols);
  size_t n = std::min(rows, cols);
  for (size_t t = 0; t < n; ++t) {
    while (true) {
      // pick smallest nonzero entry in the trailing block
      size_t bi = rows, bj = cols;
      for (size_t i = t; i < rows; ++i)
        for (size_t j = t; j < cols; ++j)
          if (a[i][j] != 0 && (bi == rows || abs(a[i][j]) < abs(a[bi][bj]))) {
            bi = i;
            bj = j;
          }
      if (bi == rows) goto finished;
      std::swap(a[t], a[bi]);
      std::swap(u[t], u[bi]);
      if (bj != t) {
        for (size_t i = 0; i < rows; ++i) std::swap(a[i][t], a[i][bj]);
        for (size_t i = 0; i < cols; ++i) std::swap(v[i][t], v[i][bj]);
      }
      bool clean = true;
      for (size_t i = t + 1; i < rows; ++i) {
        if (a[i][t] == 0) continue;
        Int q = floor_div(a[i][t], a[t][t]);
        for (size_t j = t; j < cols; ++j) a[i][j] -= q * a[t][j];
        for (size_t j = 0; j < rows; ++j) u[i][j] -= q * u[t][j];
        if (a[i][t] != 0) clean = false;
      }
      for (size_t j = t + 1; j < cols; ++j) {
        if (a[t][j] == 0) continue;
        Int q = floor_div(a[t][j], a[t][t]);
        for (size_t i = t; i < rows; ++i) a[i][j] -= q * a[i][t];
        for (size_t i = 0; i < cols; ++i) v[i][j] -= q * v[i][t];
        if (a[t][j] != 0) clean = false;
      }
      if (!clean) continue;
      // divisibility condition
      bool divides = true;
      for (size_t i = t + 1; i < rows && divides; ++i)
        for (size_t j = t + 1; j < cols; ++j)
          if (a[i][j] % a[t][t] != 0) {
            for (size_t k = t; k < cols; ++k) a[t][k] += a[i][k];
            for (size_t k = 0; k < rows; ++k) u[t][k] += u[i][k];
            divides = false;
            break;
          }
      if (divides) break;
    }
    if (a[t][t] < 0) {
      for (size_t j = t; j < cols; ++j) a[t][j] = -a[t][j];
      for (size_t j = 0; j < rows; ++j) u[t][j] = -u[t][j];
    }
  }
finished:
  Smith s{u, v, IVec(n, 0)};
  for (size_t i = 0; i < n; ++i) s.d[i] = a[i][i];
  return s;
}

/// Common denominator of a rational matrix.
inline Int common_den(const QMat& m) {
  Int d = 1;
  for (auto& r : m)
    for (auto& x : r) d = lcm(d, Int(x.get_den()));
  return d;
}

}  // namespace heegner
