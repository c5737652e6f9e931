#pragma once

// Global double Poisson-Lie groups G = G_- G_+ with exact factorization.
//
// Frame convention: a tangent vector at g is written TR_g X = X g with X in the
// Lie algebra, and left-trivialized vectors convert through TL_g X = TR_g Ad_g X.
// With A = Ad_g in the fixed basis every bivector below is a plain d x d matrix.
//
// Basis order is x_1..x_{d-} spanning g_- followed by xi_1..xi_{d+} spanning g_+.

#include "pk/errors.hpp"
#include "pk/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using cplx = std::complex<double>;

// SL(2,C) as a real six-dimensional group, G_- = SU(2), G_+ = AN (upper
// triangular, positive real diagonal). Factorization is Gram-Schmidt on columns.
class Sl2c {
 public:
  using Element = Eigen::Matrix2cd;

  std::string name() const { return "sl2c"; }
  int dim() const { return 6; }
  int dim_minus() const { return 3; }
  int dim_plus() const { return 3; }
  int serial_size() const { return 8; }

  Element identity() const { return Element::Identity(); }
  Element mul(const Element& a, const Element& b) const { return a * b; }
  Element inv(const Element& a) const {
    Element r;
    r << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
    return r / (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0));
  }
  Element normalize(const Element& a) const {
    const cplx det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    return a / std::sqrt(det);
  }

  // Basis matrices: i sigma_1, i sigma_2, i sigma_3, then sigma_3, E12, i E12.
  Element basis(int k) const {
    const cplx I(0, 1);
    Element m = Element::Zero();
    switch (k) {
      case 0: m(0, 1) = I; m(1, 0) = I; break;
      case 1: m(0, 1) = 1; m(1, 0) = -1; break;
      case 2: m(0, 0) = I; m(1, 1) = -I; break;
      case 3: m(0, 0) = 1; m(1, 1) = -1; break;
      case 4: m(0, 1) = 1; break;
      case 5: m(0, 1) = I; break;
      default: throw Error(Errc::dimension_mismatch, "sl2c basis index");
    }
    return m;
  }

  Element to_matrix(const Vec& v) const {
    Element m = Element::Zero();
    for (int k = 0; k < 6; ++k) m += v[k] * basis(k);
    return m;
  }
  // Coordinates of a traceless matrix [[a, b], [c, -a]].
  Vec to_coords(const Element& m) const {
    const cplx a = 0.5 * (m(0, 0) - m(1, 1));
    const cplx b = m(0, 1);
    const cplx c = m(1, 0);
    Vec v(6);
    v << c.imag(), -c.real(), a.imag(), a.real(), b.real() + c.real(), b.imag() - c.imag();
    return v;
  }

  Element exp(const Vec& v) const {
    const Element X = to_matrix(v);
    const cplx s2 = X(0, 0) * X(0, 0) + X(0, 1) * X(1, 0);
    cplx ch, shc;
    if (std::abs(s2) < 1e-4) {
      ch = 1.0 + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0;
      shc = 1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0;
    } else {
      const cplx s = std::sqrt(s2);
      ch = std::cosh(s);
      shc = std::sinh(s) / s;
    }
    return ch * Element::Identity() + shc * X;
  }

  Vec log(const Element& g) const {
    const cplx c = 0.5 * (g(0, 0) + g(1, 1));
    if (std::abs(c + 1.0) < 1e-3 || (g - Element::Identity()).cwiseAbs().maxCoeff() > 3.0)
      throw Error(Errc::log_out_of_range, "sl2c element too far from identity");
    const cplx w = c * c - 1.0;  // sinh(s)^2 where cosh(s) = c
    cplx f;                      // s / sinh(s)
    if (std::abs(w) < 1e-3 && c.real() > 0) {
      f = 1.0 + w * (-1.0 / 6 + w * (3.0 / 40 + w * (-5.0 / 112 + w * (35.0 / 1152 - w * (63.0 / 2816)))));
    } else {
      const cplx s = std::acosh(c);
      f = s / std::sinh(s);
    }
    return to_coords((g - c * Element::Identity()) * f);
  }

  Mat adjoint(const Element& g) const {
    const Element gi = inv(g);
    Mat A(6, 6);
    for (int j = 0; j < 6; ++j) A.col(j) = to_coords(g * basis(j) * gi);
    return A;
  }

  Vec bracket(const Vec& u, const Vec& v) const {
    const Element X = to_matrix(u), Y = to_matrix(v);
    return to_coords(X * Y - Y * X);
  }

  std::pair<Element, Element> factorize(const Element& g) const {
    const double n = std::hypot(std::abs(g(0, 0)), std::abs(g(1, 0)));
    if (!(n > 1e-150) || !std::isfinite(n))
      throw Error(Errc::factorization_failed, "degenerate first column");
    const cplx a = g(0, 0) / n, b = g(1, 0) / n;
    Element Q;
    Q << a, -std::conj(b), b, std::conj(a);
    Element R = Q.adjoint() * g;
    R(0, 0) = n;
    R(1, 0) = 0;
    R(1, 1) = 1.0 / n;
    return {Q, R};
  }

  bool in_minus(const Element& g, double tol) const {
    const cplx det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    return (g.adjoint() * g - Element::Identity()).cwiseAbs().maxCoeff() < tol &&
           std::abs(det - 1.0) < tol;
  }
  bool in_plus(const Element& g, double tol) const {
    const cplx det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    return std::abs(g(1, 0)) < tol && std::abs(g(0, 0).imag()) < tol &&
           std::abs(g(1, 1).imag()) < tol && g(0, 0).real() > 0 && std::abs(det - 1.0) < tol;
  }

  double distance(const Element& a, const Element& b) const {
    return (a - b).cwiseAbs().maxCoeff();
  }

  // B(X, xi) = Im tr(X xi).
  double pairing(int j, int k) const {
    return (basis(j) * basis(3 + k)).trace().imag();
  }

  double re_trace(const Element& g) const { return g.trace().real(); }
  double abs_trace_sq(const Element& g) const { return std::norm(g.trace()); }

  std::vector<double> to_floats(const Element& g) const {
    return {g(0, 0).real(), g(0, 0).imag(), g(0, 1).real(), g(0, 1).imag(),
            g(1, 0).real(), g(1, 0).imag(), g(1, 1).real(), g(1, 1).imag()};
  }
  Element from_floats(const std::vector<double>& f) const {
    if (f.size() != 8) throw Error(Errc::dimension_mismatch, "sl2c element needs 8 floats");
    Element g;
    g << cplx(f[0], f[1]), cplx(f[2], f[3]), cplx(f[4], f[5]), cplx(f[6], f[7]);
    return g;
  }
};

// R^n (+) R^n with abelian G_- = first n coordinates, G_+ = last n coordinates,
// zero cobrackets and the dot pairing.
class AbelianDouble {
 public:
  using Element = Eigen::VectorXd;

  explicit AbelianDouble(int n = 1) : n_(n) {
    if (n < 1) throw Error(Errc::dimension_mismatch, "abelian rank must be positive");
  }

  std::string name() const { return "abelian:" + std::to_string(n_); }
  int rank() const { return n_; }
  int dim() const { return 2 * n_; }
  int dim_minus() const { return n_; }
  int dim_plus() const { return n_; }
  int serial_size() const { return 2 * n_; }

  Element identity() const { return Element::Zero(2 * n_); }
  Element mul(const Element& a, const Element& b) const { return a + b; }
  Element inv(const Element& a) const { return -a; }
  Element normalize(const Element& a) const { return a; }
  Element exp(const Vec& v) const { return v; }
  Vec log(const Element& g) const { return g; }
  Mat adjoint(const Element&) const { return Mat::Identity(2 * n_, 2 * n_); }
  Vec bracket(const Vec&, const Vec&) const { return Vec::Zero(2 * n_); }

  std::pair<Element, Element> factorize(const Element& g) const {
    Element m = Element::Zero(2 * n_), p = Element::Zero(2 * n_);
    m.head(n_) = g.head(n_);
    p.tail(n_) = g.tail(n_);
    return {m, p};
  }
  bool in_minus(const Element& g, double tol) const {
    return g.tail(n_).cwiseAbs().maxCoeff() < tol;
  }
  bool in_plus(const Element& g, double tol) const {
    return g.head(n_).cwiseAbs().maxCoeff() < tol;
  }
  double distance(const Element& a, const Element& b) const {
    return (a - b).cwiseAbs().maxCoeff();
  }
  double pairing(int j, int k) const { return j == k ? 1.0 : 0.0; }

  // The group is abelian, so every function is a class function; these two
  // stand in for the trace invariants of matrix backends.
  double re_trace(const Element& g) const { return g.sum(); }
  double abs_trace_sq(const Element& g) const { return g.sum() * g.sum(); }

  std::vector<double> to_floats(const Element& g) const {
    return std::vector<double>(g.data(), g.data() + g.size());
  }
  Element from_floats(const std::vector<double>& f) const {
    if (static_cast<int>(f.size()) != 2 * n_)
      throw Error(Errc::dimension_mismatch, "abelian element needs " + std::to_string(2 * n_) + " floats");
    return Eigen::Map<const Vec>(f.data(), 2 * n_);
  }

 private:
  int n_;
};

// r = sum_k x_k (x) xi^k with xi^k the dual basis of g_+ under the pairing.
template <class B>
Mat build_r_matrix(const B& b) {
  const int dm = b.dim_minus(), dp = b.dim_plus();
  if (dm != dp) throw Error(Errc::singular_pairing, "g_- and g_+ differ in dimension");
  Mat P(dm, dp);
  for (int j = 0; j < dm; ++j)
    for (int k = 0; k < dp; ++k) P(j, k) = b.pairing(j, k);
  Eigen::FullPivLU<Mat> lu(P);
  if (!lu.isInvertible()) throw Error(Errc::singular_pairing, "pairing matrix not invertible");
  const Mat C = lu.inverse();
  Mat R = Mat::Zero(dm + dp, dm + dp);
  for (int k = 0; k < dm; ++k)
    for (int m = 0; m < dp; ++m) R(k, dm + m) = C(m, k);
  return R;
}

template <class B>
class DoubleGroup {
 public:
  using Backend = B;
  using Element = typename B::Element;

  explicit DoubleGroup(B backend = B{}) : b_(std::move(backend)) {
    d_ = b_.dim();
    R_ = build_r_matrix(b_);
    Ra_ = 0.5 * (R_ - R_.transpose());
    Rs_ = 0.5 * (R_ + R_.transpose());
    ad_.resize(d_);
    for (int a = 0; a < d_; ++a) {
      ad_[a] = Mat(d_, d_);
      for (int c = 0; c < d_; ++c) ad_[a].col(c) = b_.bracket(Vec::Unit(d_, a), Vec::Unit(d_, c));
    }
  }

  const B& backend() const { return b_; }
  std::string name() const { return b_.name(); }
  int dim() const { return d_; }
  int dim_minus() const { return b_.dim_minus(); }
  int dim_plus() const { return b_.dim_plus(); }

  Element identity() const { return b_.identity(); }
  Element mul(const Element& a, const Element& b) const { return b_.mul(a, b); }
  Element mul(const Element& a, const Element& b, const Element& c) const {
    return b_.mul(b_.mul(a, b), c);
  }
  Element inv(const Element& a) const { return b_.inv(a); }
  Element normalize(const Element& a) const { return b_.normalize(a); }
  Element exp(const Vec& v) const { return b_.exp(v); }
  Vec log(const Element& g) const { return b_.log(g); }
  Mat adjoint(const Element& g) const { return b_.adjoint(g); }
  Vec bracket(const Vec& u, const Vec& v) const { return b_.bracket(u, v); }

  std::pair<Element, Element> factorize(const Element& g) const { return b_.factorize(g); }
  Element pi_minus(const Element& g) const { return b_.factorize(g).first; }
  Element pi_plus(const Element& g) const { return b_.factorize(g).second; }

  bool in_minus(const Element& g, double tol = 1e-9) const { return b_.in_minus(g, tol); }
  bool in_plus(const Element& g, double tol = 1e-9) const { return b_.in_plus(g, tol); }
  double distance(const Element& a, const Element& b) const { return b_.distance(a, b); }
  double re_trace(const Element& g) const { return b_.re_trace(g); }
  double abs_trace_sq(const Element& g) const { return b_.abs_trace_sq(g); }

  // Embeddings of subalgebra coordinates into g.
  Vec embed_minus(const Vec& u) const {
    Vec v = Vec::Zero(d_);
    v.head(dim_minus()) = u;
    return v;
  }
  Vec embed_plus(const Vec& u) const {
    Vec v = Vec::Zero(d_);
    v.tail(dim_plus()) = u;
    return v;
  }

  Element random(Rng& rng, double radius = 0.5) const { return exp(rng.ball(d_, radius)); }
  Element random_minus(Rng& rng, double radius = 0.5) const {
    return exp(embed_minus(rng.ball(dim_minus(), radius)));
  }
  Element random_plus(Rng& rng, double radius = 0.5) const {
    return exp(embed_plus(rng.ball(dim_plus(), radius)));
  }

  const Mat& r() const { return R_; }
  const Mat& ra() const { return Ra_; }
  const Mat& rs() const { return Rs_; }
  Mat r21() const { return R_.transpose(); }
  // ad_basis()[a](:, c) = coordinates of [x_a, x_c].
  const std::vector<Mat>& ad_basis() const { return ad_; }

  // Sklyanin bivector.
  Mat w(const Element& g) const {
    const Mat A = adjoint(g);
    return A * R_ * A.transpose() - R_;
  }
  // Heisenberg double bivector.
  Mat w_h(const Element& g) const {
    const Mat A = adjoint(g);
    return -(A * Ra_ * A.transpose() + Ra_);
  }
  Mat w_gstar(const Element& g) const {
    const Mat A = adjoint(g);
    return -(A * Ra_ * A.transpose() + Ra_) - A * R_.transpose() + R_ * A.transpose();
  }

  // Largest entry of [r12, r13] + [r12, r23] + [r13, r23].
  double cybe_residual(const Mat& r) const {
    std::vector<double> T(static_cast<std::size_t>(d_) * d_ * d_, 0.0);
    auto at = [&](int i, int j, int k) -> double& {
      return T[(static_cast<std::size_t>(i) * d_ + j) * d_ + k];
    };
    for (int a = 0; a < d_; ++a)
      for (int b = 0; b < d_; ++b) {
        if (r(a, b) == 0.0) continue;
        for (int c = 0; c < d_; ++c)
          for (int e = 0; e < d_; ++e) {
            const double rr = r(a, b) * r(c, e);
            if (rr == 0.0) continue;
            for (int i = 0; i < d_; ++i) {
              at(i, b, e) += rr * ad_[a](i, c);  // [x_a, x_c] (x) x_b (x) x_e
              at(a, i, e) += rr * ad_[b](i, c);  // x_a (x) [x_b, x_c] (x) x_e
              at(a, c, i) += rr * ad_[b](i, e);  // x_a (x) x_c (x) [x_b, x_e]
            }
          }
      }
    double m = 0.0;
    for (double t : T) m = std::max(m, std::abs(t));
    return m;
  }

  // Largest residual of the four projection identities
  //   pi_-(g pi_-(h)) = pi_-(gh),  pi_+(pi_+(g) h) = pi_+(gh),
  //   pi_-(x g) = x pi_-(g),       pi_+(g alpha) = pi_+(g) alpha.
  double projection_rules_residual(const Element& g, const Element& h, const Element& x,
                                   const Element& alpha) const {
    const Element gh = mul(g, h);
    double r = distance(pi_minus(mul(g, pi_minus(h))), pi_minus(gh));
    r = std::max(r, distance(pi_plus(mul(pi_plus(g), h)), pi_plus(gh)));
    r = std::max(r, distance(pi_minus(mul(x, g)), mul(x, pi_minus(g))));
    r = std::max(r, distance(pi_plus(mul(g, alpha)), mul(pi_plus(g), alpha)));
    return r;
  }

  std::vector<double> to_floats(const Element& g) const { return b_.to_floats(g); }
  Element from_floats(const std::vector<double>& f) const { return b_.from_floats(f); }

  // Little-endian IEEE-754 doubles.
  std::vector<std::uint8_t> to_bytes(const Element& g) const {
    std::vector<std::uint8_t> out;
    for (double x : to_floats(g)) {
      const auto u = std::bit_cast<std::uint64_t>(x);
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
    return out;
  }
  Element from_bytes(const std::vector<std::uint8_t>& bytes) const {
    if (bytes.size() % 8 != 0) throw Error(Errc::parse_error, "byte length not a multiple of 8");
    std::vector<double> f;
    for (std::size_t k = 0; k < bytes.size(); k += 8) {
      std::uint64_t u = 0;
      for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[k + i]) << (8 * i);
      f.push_back(std::bit_cast<double>(u));
    }
    return from_floats(f);
  }

 private:
  B b_;
  int d_ = 0;
  Mat R_, Ra_, Rs_;
  std::vector<Mat> ad_;
};

}  // namespace pk
