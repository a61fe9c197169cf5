#include "cfkd/numcore/random.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <numeric>

namespace cfkd::numcore {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6A09E667F3BCC909ULL;
    for (std::uint64_t p : parts) {
        h = splitmix(h ^ splitmix(p));
    }
    return h;
}

Rng make_rng(std::initializer_list<std::uint64_t> parts) {
    return Rng(derive_seed(parts));
}

double draw_normal(Rng& rng, double mean, double stddev) {
    boost::random::normal_distribution<double> dist(mean, stddev);
    return dist(rng);
}

double draw_uniform01(Rng& rng) {
    boost::random::uniform_01<double> dist;
    return dist(rng);
}

long draw_int(Rng& rng, long lo, long hi) {
    boost::random::uniform_int_distribution<long> dist(lo, hi);
    return dist(rng);
}

bool draw_bernoulli(Rng& rng, double p) {
    boost::random::bernoulli_distribution<double> dist(p);
    return dist(rng);
}

double draw_exponential(Rng& rng, double rate) {
    boost::random::exponential_distribution<double> dist(rate);
    return dist(rng);
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(draw_int(rng, 0, static_cast<long>(i - 1)));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace cfkd::numcore
