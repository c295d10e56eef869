#pragma once

#include <functional>

#include "linalg.hpp"

namespace heegner {

/// Exact LLL reduction of a positive-definite integral Gram matrix.
/// Returns t with reduced Gram t * g * t^T (rows of t are the new basis in old coordinates).
inline IMat lll_gram(const IMat& g) {
  size_t n = g.size();
  IMat t = identity_imat(n);
  if (n < 2) return t;
  IMat G = g;
  QMat mu(n, QVec(n, 0));
  QVec b(n, 0);
  auto refresh = [&]() {
    G = mul(mul(t, g), transpose(t));
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < i; ++j) {
        Rat s = Rat(G[i][j]);
        for (size_t k = 0; k < j; ++k) s -= mu[j][k] * mu[i][k] * b[k];
        mu[i][j] = s / b[j];
      }
      Rat s = Rat(G[i][i]);
      for (size_t k = 0; k < i; ++k) s -= mu[i][k] * mu[i][k] * b[k];
      b[i] = s;
    }
  };
  refresh();
  const Rat delta(3, 4);
  size_t k = 1;
  while (k < n) {
    bool changed = false;
    for (size_t j = k; j-- > 0;) {
      Int q = floor(mu[k][j] + Rat(1, 2));
      if (q == 0) continue;
      changed = true;
      for (size_t l = 0; l < n; ++l) t[k][l] -= q * t[j][l];
      for (size_t l = 0; l < j; ++l) mu[k][l] -= Rat(q) * mu[j][l];
      mu[k][j] -= Rat(q);
    }
    if (changed) refresh();
    if (b[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * b[k - 1]) {
      ++k;
    } else {
      std::swap(t[k], t[k - 1]);
      refresh();
      k = std::max<size_t>(k - 1, 1);
    }
  }
  return t;
}

/// Exact Fincke-Pohst: calls f(x) for every nonzero x in Z^n with x^T g x <= bound.
/// Bounds at each level are exact rationals; no floating point decides pruning.
inline void enumerate_short(const IMat& g, const Int& bound, const std::function<void(const IVec&)>& f) {
  size_t n = g.size();
  IMat t = lll_gram(g);
  IMat G = mul(mul(t, g), transpose(t));
  // G = sum_i q_i (y_i + sum_{j>i} m_ij y_j)^2
  QMat a(n, QVec(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) a[i][j] = Rat(G[i][j]);
  QVec q(n);
  QMat m(n, QVec(n, 0));
  for (size_t i = 0; i < n; ++i) {
    q[i] = a[i][i];
    for (size_t j = i + 1; j < n; ++j) m[i][j] = a[i][j] / q[i];
    for (size_t j = i + 1; j < n; ++j)
      for (size_t l = j; l < n; ++l) {
        a[j][l] -= m[i][j] * m[i][l] * q[i];
        a[l][j] = a[j][l];
      }
  }
  IVec y(n, 0), x(n);
  std::vector<Rat> rem(n + 1);
  rem[n] = Rat(bound);
  // interval of integers z with q (z - c)^2 <= r
  auto range = [](const Rat& qq, const Rat& c, const Rat& r, Int& lo, Int& hi) {
    // s^2 = r / qq ; integer candidates around c
    Rat s2 = r / qq;
    Int s = isqrt(floor(s2)) + 1;  // s >= sqrt(s2)
    lo = ceil(c) - s;
    hi = floor(c) + s;
    auto ok = [&](const Int& z) {
      Rat d = Rat(z) - c;
      return qq * d * d <= r;
    };
    while (lo <= hi && !ok(lo)) ++lo;
    while (hi >= lo && !ok(hi)) --hi;
  };
  std::vector<Int> lo(n), hi(n);
  std::vector<Rat> center(n);
  auto center_at = [&](size_t i) {
    Rat c = 0;
    for (size_t j = i + 1; j < n; ++j)
      if (y[j] != 0) c -= m[i][j] * Rat(y[j]);
    return c;
  };
  size_t i = n - 1;
  center[i] = 0;
  range(q[i], center[i], rem[n], lo[i], hi[i]);
  y[i] = lo[i];
  while (true) {
    if (y[i] > hi[i]) {
      if (i == n - 1) break;
      ++i;
      ++y[i];
      continue;
    }
    Rat d = Rat(y[i]) - center[i];
    rem[i] = rem[i + 1] - q[i] * d * d;
    if (i == 0) {
      bool zero = true;
      for (auto& v : y)
        if (v != 0) zero = false;
      if (!zero) {
        for (size_t c = 0; c < n; ++c) {
          x[c] = 0;
          for (size_t r = 0; r < n; ++r)
            if (y[r] != 0) x[c] += y[r] * t[r][c];
        }
        f(x);
      }
      ++y[i];
      continue;
    }
    --i;
    center[i] = center_at(i);
    range(q[i], center[i], rem[i + 1], lo[i], hi[i]);
    y[i] = lo[i];
  }
}

inline std::vector<IVec> short_vectors(const IMat& g, const Int& bound) {
  std::vector<IVec> out;
  enumerate_short(g, bound, [&](const IVec& x) { out.push_back(x); });
  return out;
}

inline Int quad_value(const IMat& g, const IVec& x) {
  Int s = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0) continue;
    Int r = 0;
    for (size_t j = 0; j < x.size(); ++j) r += g[i][j] * x[j];
    s += x[i] * r;
  }
  return s;
}

}  // namespace heegner
