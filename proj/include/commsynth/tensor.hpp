#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "commsynth/core_model.hpp"

namespace commsynth {

/// Dense row-major 4-D tensor.
template <class Scalar>
class Tensor4 {
 public:
  using Extents = std::array<Count, 4>;

  Tensor4() = default;
  explicit Tensor4(const Extents& extents, Scalar fill = Scalar{})
      : extents_(extents),
        data_(static_cast<std::size_t>(extents[0] * extents[1] * extents[2] * extents[3]), fill) {}

  const Extents& extents() const { return extents_; }
  Count size() const { return static_cast<Count>(data_.size()); }

  Scalar& operator()(Count i0, Count i1, Count i2, Count i3) { return data_[offset(i0, i1, i2, i3)]; }
  const Scalar& operator()(Count i0, Count i1, Count i2, Count i3) const {
    return data_[offset(i0, i1, i2, i3)];
  }
  Scalar& operator[](const Extents& idx) { return (*this)(idx[0], idx[1], idx[2], idx[3]); }
  const Scalar& operator[](const Extents& idx) const {
    return (*this)(idx[0], idx[1], idx[2], idx[3]);
  }

  std::span<Scalar> values() { return data_; }
  std::span<const Scalar> values() const { return data_; }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t offset(Count i0, Count i1, Count i2, Count i3) const {
    return static_cast<std::size_t>(((i0 * extents_[1] + i1) * extents_[2] + i2) * extents_[3] + i3);
  }

  Extents extents_{};
  std::vector<Scalar> data_;
};

inline Tensor4<std::int64_t>::Extents in_extents(const ConvProblem& p) {
  return {p.n_b, p.n_c, p.in_width(), p.in_height()};
}
inline Tensor4<std::int64_t>::Extents ker_extents(const ConvProblem& p) {
  return {p.n_k, p.n_c, p.n_r, p.n_s};
}
inline Tensor4<std::int64_t>::Extents out_extents(const ConvProblem& p) {
  return {p.n_b, p.n_k, p.n_w, p.n_h};
}

/// Direct seven-deep loop nest:
///   Out[b,k,w,h] = sum_{c,r,s} In[b, c, sigma_w w + r, sigma_h h + s] * Ker[k, c, r, s]
/// Throws simulator.ShapeMismatch on wrong operand extents.
template <class Scalar>
Tensor4<Scalar> reference_convolution(const ConvProblem& prob, const Tensor4<Scalar>& in,
                                      const Tensor4<Scalar>& ker) {
  if (in.extents() != in_extents(prob)) {
    throw Error("simulator.ShapeMismatch", "In extents do not match the problem");
  }
  if (ker.extents() != ker_extents(prob)) {
    throw Error("simulator.ShapeMismatch", "Ker extents do not match the problem");
  }
  Tensor4<Scalar> out(out_extents(prob));
  for (Count b = 0; b < prob.n_b; ++b)
    for (Count k = 0; k < prob.n_k; ++k)
      for (Count w = 0; w < prob.n_w; ++w)
        for (Count h = 0; h < prob.n_h; ++h) {
          Scalar acc{};
          for (Count c = 0; c < prob.n_c; ++c)
            for (Count r = 0; r < prob.n_r; ++r)
              for (Count s = 0; s < prob.n_s; ++s)
                acc += in(b, c, prob.sigma_w * w + r, prob.sigma_h * h + s) * ker(k, c, r, s);
          out(b, k, w, h) = acc;
        }
  return out;
}

struct ConvInputs {
  Tensor4<std::int64_t> in;
  Tensor4<std::int64_t> ker;
};

/// Portable small-integer inputs: std::mt19937_64(seed), value = (draw % 9) - 4,
/// In filled in row-major order first, then Ker.
inline ConvInputs generate_inputs(const ConvProblem& prob, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  ConvInputs inputs{Tensor4<std::int64_t>(in_extents(prob)),
                    Tensor4<std::int64_t>(ker_extents(prob))};
  for (auto& v : inputs.in.values()) v = static_cast<std::int64_t>(gen() % 9) - 4;
  for (auto& v : inputs.ker.values()) v = static_cast<std::int64_t>(gen() % 9) - 4;
  return inputs;
}

}  // namespace commsynth
