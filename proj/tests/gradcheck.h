#pragma once

// Central finite differences over every encoder parameter, for comparing
// against analytic GradientSets.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "augtriever/encoder.h"

namespace gradcheck {

using Params = augtriever::encoder::BasicEncoderParams<double>;

/// Flattened as embed, proj, bias.
inline std::vector<double> flatten(const augtriever::encoder::GradientSet& g, std::size_t vocab_size) {
    std::vector<double> out(vocab_size * g.dim, 0.0);
    for (const auto& [t, row] : g.d_embed) std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(t * g.dim));
    out.insert(out.end(), g.d_proj.begin(), g.d_proj.end());
    out.insert(out.end(), g.d_bias.begin(), g.d_bias.end());
    return out;
}

template <typename F>
std::vector<double> numeric(Params p, F&& f, double h = 1e-6) {
    std::vector<double*> coords;
    for (auto& x : p.embed) coords.push_back(&x);
    for (auto& x : p.proj) coords.push_back(&x);
    for (auto& x : p.bias) coords.push_back(&x);
    std::vector<double> out(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        double keep = *coords[i];
        *coords[i] = keep + h;
        double up = f(p);
        *coords[i] = keep - h;
        double down = f(p);
        *coords[i] = keep;
        out[i] = (up - down) / (2.0 * h);
    }
    return out;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double denom = std::sqrt(std::max(na, nb));
    return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

inline Params random_params(std::size_t v, std::size_t h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Params p(v, h);
    for (auto& x : p.embed) x = u(rng);
    for (auto& x : p.proj) x = u(rng);
    for (auto& x : p.bias) x = 0.5 * u(rng);
    return p;
}

inline std::vector<std::uint32_t> random_tokens(std::size_t v, std::mt19937_64& rng, std::size_t max_len = 6) {
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<std::uint32_t> tok(0, static_cast<std::uint32_t>(v - 1));
    std::vector<std::uint32_t> t(len(rng));
    for (auto& x : t) x = tok(rng);
    return t;
}

}  // namespace gradcheck
