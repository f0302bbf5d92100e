#pragma once

#include "scaleguard/image.hpp"
#include "scaleguard/rng.hpp"
#include "scaleguard/scaling.hpp"

namespace sgtest {

/// Per-pixel downscale: every output sample is evaluated directly from the
/// kernel at its half-pixel source position, without any axis operator.
scaleguard::RasterImage reference_scale(const scaleguard::RasterImage& img, const scaleguard::ScaleSpec& spec);

/// Kernel weight of a source sample at signed distance d.
double reference_kernel(scaleguard::Algorithm alg, double d);

scaleguard::RasterImage random_image(scaleguard::Rng& rng, int height, int width, int channels);

/// Smooth random content (sum of a few low-frequency sinusoids plus mild noise).
scaleguard::RasterImage textured_image(scaleguard::Rng& rng, int height, int width, int channels);

scaleguard::ScaleSpec random_spec(scaleguard::Rng& rng, scaleguard::Algorithm alg, int max_side);

} // namespace sgtest
