#ifndef ULFE_LMI_HPP
#define ULFE_LMI_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ulfe/matlib.hpp"
#include "ulfe/sdp.hpp"

// Affine matrix expressions over scalar decision variables and a program
// builder that lowers matrix inequalities to sdp::Problem blocks.
namespace ulfe::lmi {

/// constant + sum_k y_k * terms[k]
class Affine {
 public:
  Affine() = default;
  Affine(Eigen::Index rows, Eigen::Index cols) : constant_(Mat::Zero(rows, cols)) {}
  explicit Affine(Mat constant) : constant_(std::move(constant)) {}

  static Affine zero(Eigen::Index rows, Eigen::Index cols) { return Affine(rows, cols); }

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }
  const Mat& constant() const { return constant_; }
  const std::map<int, Mat>& terms() const { return terms_; }

  void add_term(int var, const Mat& coeff) {
    auto it = terms_.find(var);
    if (it == terms_.end()) terms_.emplace(var, coeff);
    else it->second += coeff;
  }

  Mat evaluate(const Vec& y) const {
    Mat out = constant_;
    for (const auto& [k, c] : terms_) out += y(k) * c;
    return out;
  }

  Affine transpose() const {
    Affine out(Mat(constant_.transpose()));
    for (const auto& [k, c] : terms_) out.terms_.emplace(k, c.transpose());
    return out;
  }

  Affine& operator+=(const Affine& o) {
    check_same(o);
    constant_ += o.constant_;
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }
  Affine& operator-=(const Affine& o) { return *this += -o; }
  Affine operator-() const { return (*this) * -1.0; }

  friend Affine operator+(Affine a, const Affine& b) { return a += b; }
  friend Affine operator-(Affine a, const Affine& b) { return a -= b; }
  friend Affine operator+(Affine a, const Mat& b) { return a += Affine(b); }
  friend Affine operator-(Affine a, const Mat& b) { return a -= Affine(b); }

  friend Affine operator*(const Affine& a, double s) {
    Affine out(Mat(a.constant_ * s));
    for (const auto& [k, c] : a.terms_) out.terms_.emplace(k, c * s);
    return out;
  }
  friend Affine operator*(double s, const Affine& a) { return a * s; }

  friend Affine operator*(const Mat& left, const Affine& a) {
    if (left.cols() != a.rows()) throw std::invalid_argument("lmi::Affine: product shape mismatch");
    Affine out(Mat(left * a.constant_));
    for (const auto& [k, c] : a.terms_) out.terms_.emplace(k, left * c);
    return out;
  }
  friend Affine operator*(const Affine& a, const Mat& right) {
    if (a.cols() != right.rows()) throw std::invalid_argument("lmi::Affine: product shape mismatch");
    Affine out(Mat(a.constant_ * right));
    for (const auto& [k, c] : a.terms_) out.terms_.emplace(k, c * right);
    return out;
  }

 private:
  void check_same(const Affine& o) const {
    if (rows() != o.rows() || cols() != o.cols())
      throw std::invalid_argument("lmi::Affine: sum shape mismatch");
  }

  Mat constant_;
  std::map<int, Mat> terms_;
};

/// Block assembly. Every row of blocks must share a height and every column a
/// width; zero-size blocks are allowed.
inline Affine block(const std::vector<std::vector<Affine>>& rows) {
  if (rows.empty()) return Affine(0, 0);
  const std::size_t nc = rows.front().size();
  std::vector<Eigen::Index> h(rows.size()), w(nc);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != nc) throw std::invalid_argument("lmi::block: ragged block rows");
    h[i] = rows[i][0].rows();
  }
  for (std::size_t j = 0; j < nc; ++j) w[j] = rows[0][j].cols();
  Eigen::Index total_h = 0, total_w = 0;
  for (auto v : h) total_h += v;
  for (auto v : w) total_w += v;
  Affine out(total_h, total_w);
  Mat constant = Mat::Zero(total_h, total_w);
  std::map<int, Mat> terms;
  Eigen::Index r0 = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::Index c0 = 0;
    for (std::size_t j = 0; j < nc; ++j) {
      const Affine& b = rows[i][j];
      if (b.rows() != h[i] || b.cols() != w[j])
        throw std::invalid_argument("lmi::block: inconsistent block sizes");
      constant.block(r0, c0, h[i], w[j]) = b.constant();
      for (const auto& [k, c] : b.terms()) {
        auto it = terms.find(k);
        if (it == terms.end()) it = terms.emplace(k, Mat::Zero(total_h, total_w)).first;
        it->second.block(r0, c0, h[i], w[j]) += c;
      }
      c0 += w[j];
    }
    r0 += h[i];
  }
  Affine result(constant);
  for (const auto& [k, c] : terms) result.add_term(k, c);
  return result;
}

/// Affine expression for sym(A) = A + A^T.
inline Affine sym(const Affine& a) { return a + a.transpose(); }

class Program {
 public:
  /// Symmetric n×n matrix variable; n(n+1)/2 scalars.
  Affine symmetric(Eigen::Index n) {
    Affine out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i <= j; ++i) {
        Mat c = Mat::Zero(n, n);
        c(i, j) = 1.0;
        c(j, i) = 1.0;
        out.add_term(new_scalar(), c);
      }
    return out;
  }

  /// Unstructured r×c matrix variable.
  Affine full(Eigen::Index r, Eigen::Index c) {
    Affine out(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) {
        Mat e = Mat::Zero(r, c);
        e(i, j) = 1.0;
        out.add_term(new_scalar(), e);
      }
    return out;
  }

  /// Scalar variable as a 1×1 expression; its index is scalar_index(expr).
  Affine scalar() {
    Affine out(1, 1);
    out.add_term(new_scalar(), Mat::Ones(1, 1));
    return out;
  }

  static int scalar_index(const Affine& s) {
    if (s.rows() != 1 || s.cols() != 1 || s.terms().size() != 1)
      throw std::invalid_argument("lmi::Program: not a plain scalar variable");
    return s.terms().begin()->first;
  }

  /// f >= margin * I. Asymmetric input is rejected.
  void require_psd(const Affine& f, double margin, std::string name) {
    if (f.rows() != f.cols()) throw std::invalid_argument("lmi: non-square constraint " + name);
    if (f.rows() == 0) return;
    check_symmetric(f, name);
    Affine g = f - Mat(margin * Mat::Identity(f.rows(), f.rows()));
    blocks_.push_back(std::move(g));
    names_.push_back(std::move(name));
  }

  /// f <= -margin * I.
  void require_nsd(const Affine& f, double margin, std::string name) {
    require_psd(-f, margin, std::move(name));
  }

  /// Minimize the 1×1 expression (its constant part is ignored).
  void minimize(const Affine& objective) {
    if (objective.rows() != 1 || objective.cols() != 1)
      throw std::invalid_argument("lmi::Program::minimize: objective must be 1x1");
    objective_ = objective;
  }

  int num_vars() const { return num_vars_; }
  const std::vector<std::string>& block_names() const { return names_; }
  const std::vector<Affine>& blocks() const { return blocks_; }

  sdp::Problem to_sdp() const {
    sdp::Problem p;
    p.coeffs.resize(num_vars_);
    p.objective = Vec::Zero(num_vars_);
    for (const auto& [k, c] : objective_.terms()) p.objective(k) = c(0, 0);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      p.f0.push_back(blocks_[b].constant());
      for (const auto& [k, c] : blocks_[b].terms()) {
        sdp::SpMat sp = c.sparseView(0.0, 0.0);
        if (sp.nonZeros() == 0) continue;
        sp.makeCompressed();
        p.coeffs[k].push_back({static_cast<int>(b), std::move(sp)});
      }
    }
    return p;
  }

 private:
  int new_scalar() { return num_vars_++; }

  static void check_symmetric(const Affine& f, const std::string& name) {
    auto asym = [](const Mat& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); };
    double worst = f.rows() ? asym(f.constant()) : 0.0;
    double scale = f.rows() ? f.constant().cwiseAbs().maxCoeff() : 0.0;
    for (const auto& [k, c] : f.terms()) {
      worst = std::max(worst, asym(c));
      scale = std::max(scale, c.cwiseAbs().maxCoeff());
    }
    if (worst > 1e-12 * (1.0 + scale))
      throw std::logic_error("lmi: constraint '" + name + "' is not symmetric");
  }

  int num_vars_ = 0;
  std::vector<Affine> blocks_;
  std::vector<std::string> names_;
  Affine objective_{1, 1};
};

}  // namespace ulfe::lmi

#endif  // ULFE_LMI_HPP
