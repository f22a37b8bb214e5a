#ifndef LAYOUT_INFER_FIT_HPP
#define LAYOUT_INFER_FIT_HPP

#include <algorithm>
#include <span>
#include <vector>

#include "layout_infer/layout_model.hpp"
#include "layout_infer/sampler.hpp"

namespace layout_infer {

/// Natural-coordinate transform for layout draws.
inline void layout_to_natural(std::span<const double> u, std::span<double> out) {
  const ParamsNatural p = to_natural(u);
  std::copy(p.abilities.begin(), p.abilities.end(), out.begin());
  out[p.abilities.size()] = p.base_chance;
  out[p.abilities.size() + 1] = p.concentration;
}

/// Fits one measurement layout with NUTS.
inline Posterior fit_layout(const LayoutSpec& spec, std::span<const Instance> instances,
                            const SamplerConfig& config) {
  const LayoutModel model(spec, instances);
  Posterior post = nuts_sample(model, config, model.param_names());
  post.to_natural = layout_to_natural;
  return post;
}

/// Same target, random-walk Metropolis; used to cross-check NUTS.
inline Posterior fit_layout_rwm(const LayoutSpec& spec, std::span<const Instance> instances,
                                const SamplerConfig& config) {
  const LayoutModel model(spec, instances);
  Posterior post = rw_metropolis(model, config, model.param_names());
  post.to_natural = layout_to_natural;
  return post;
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_FIT_HPP
