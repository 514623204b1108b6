#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbsde {

/// Finitely supported mark space: atoms e_1..e_m in R^n with positive
/// intensities lambda_1..lambda_m. The empty space (m = 0) is valid and
/// means "no jumps".
///
/// Construction enforces: intensities positive and finite, marks pairwise
/// distinct, and the Levy-type mass  sum_j lambda_j (1 and |e_j|^2)  finite.
class MarkSpace {
 public:
  MarkSpace() = default;

  MarkSpace(std::size_t mark_dim, std::vector<double> marks,
            std::vector<double> intensities)
      : mark_dim_(mark_dim),
        marks_(std::move(marks)),
        intensities_(std::move(intensities)) {
    if (mark_dim_ == 0) throw std::invalid_argument("mark dimension must be >= 1");
    if (marks_.size() != intensities_.size() * mark_dim_)
      throw std::invalid_argument("marks/intensities size mismatch");
    double mass = 0.0;
    for (std::size_t j = 0; j < intensities_.size(); ++j) {
      const double lam = intensities_[j];
      if (!(lam > 0.0) || !std::isfinite(lam))
        throw std::invalid_argument("atom intensity must be positive and finite, got " +
                                    std::to_string(lam));
      double norm2 = 0.0;
      for (std::size_t c = 0; c < mark_dim_; ++c) {
        const double x = marks_[j * mark_dim_ + c];
        if (!std::isfinite(x)) throw std::invalid_argument("mark component must be finite");
        norm2 += x * x;
      }
      mass += lam * std::min(1.0, norm2);
      total_ += lam;
    }
    if (!std::isfinite(mass) || !std::isfinite(total_))
      throw std::invalid_argument("total intensity mass must be finite");
    for (std::size_t a = 0; a < intensities_.size(); ++a)
      for (std::size_t b = a + 1; b < intensities_.size(); ++b) {
        bool same = true;
        for (std::size_t c = 0; c < mark_dim_; ++c)
          if (marks_[a * mark_dim_ + c] != marks_[b * mark_dim_ + c]) {
            same = false;
            break;
          }
        if (same)
          throw std::invalid_argument("atoms " + std::to_string(a) + " and " +
                                      std::to_string(b) + " carry the same mark");
      }
  }

  std::size_t atom_count() const { return intensities_.size(); }
  std::size_t mark_dim() const { return mark_dim_; }

  std::span<const double> mark(std::size_t j) const {
    return {marks_.data() + j * mark_dim_, mark_dim_};
  }

  double intensity(std::size_t j) const { return intensities_[j]; }
  const std::vector<double>& intensities() const { return intensities_; }
  double total_intensity() const { return total_; }

  bool operator==(const MarkSpace&) const = default;

 private:
  std::size_t mark_dim_ = 1;
  std::vector<double> marks_;
  std::vector<double> intensities_;
  double total_ = 0.0;
};

/// Function on the mark space with values in R^k, stored atom-major:
/// values[j * block_size + c] is component c at atom j.
struct LambdaVector {
  std::size_t block_size = 1;
  std::vector<double> values;
};

/// Weighted l2 norm over atoms for a block layout, || v ||_lambda.
inline double l2_lambda_norm(std::span<const double> blocks, std::size_t block_size,
                             const MarkSpace& ms) {
  if (blocks.size() != ms.atom_count() * block_size)
    throw std::invalid_argument("lambda-vector length does not match atom count");
  double s = 0.0;
  for (std::size_t j = 0; j < ms.atom_count(); ++j) {
    double b2 = 0.0;
    for (std::size_t c = 0; c < block_size; ++c) {
      const double x = blocks[j * block_size + c];
      b2 += x * x;
    }
    s += ms.intensity(j) * b2;
  }
  return std::sqrt(s);
}

inline double l2_lambda_norm(const LambdaVector& v, const MarkSpace& ms) {
  return l2_lambda_norm(v.values, v.block_size, ms);
}

/// Intensity-weighted pairing  integral v * kappa dlambda  for scalar-block
/// vectors (block_size 1).
inline double integrate_kernel(std::span<const double> v, std::span<const double> kappa,
                               const MarkSpace& ms) {
  if (v.size() != ms.atom_count() || kappa.size() != ms.atom_count())
    throw std::invalid_argument("kernel pairing needs one scalar per atom");
  double s = 0.0;
  for (std::size_t j = 0; j < ms.atom_count(); ++j) s += ms.intensity(j) * v[j] * kappa[j];
  return s;
}

inline double integrate_kernel(const LambdaVector& v, const LambdaVector& kappa,
                               const MarkSpace& ms) {
  if (v.block_size != 1 || kappa.block_size != 1)
    throw std::invalid_argument("kernel pairing is defined for scalar blocks");
  return integrate_kernel(std::span<const double>(v.values),
                          std::span<const double>(kappa.values), ms);
}

}  // namespace gbsde
