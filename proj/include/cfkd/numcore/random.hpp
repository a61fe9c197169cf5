#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cfkd::numcore {

/// Engine used everywhere. The std engines are bit-specified by the standard;
/// distributions come from Boost.Random so sampled values are portable too.
using Rng = std::mt19937_64;

/// Mixes a list of integers into a stream seed (splitmix64 finalizer chain).
/// Used to derive independent streams from (master seed, index, ...) tuples.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

Rng make_rng(std::initializer_list<std::uint64_t> parts);

double draw_normal(Rng& rng, double mean, double stddev);
double draw_uniform01(Rng& rng);
/// Inclusive integer range.
long draw_int(Rng& rng, long lo, long hi);
bool draw_bernoulli(Rng& rng, double p);
double draw_exponential(Rng& rng, double rate);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

} // namespace cfkd::numcore
