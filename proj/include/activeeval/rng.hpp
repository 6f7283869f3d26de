#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace activeeval {

using Rng = std::mt19937_64;

// SplitMix64 mix of (master, stream): independent, reproducible seeds for
// per-run and per-component generators.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

// Uniform real in [0, 1).
double uniform01(Rng& rng);

bool bernoulli(Rng& rng, double p);

// Beta(a, b) via two gamma draws; a, b > 0 (fractional allowed).
double sample_beta(Rng& rng, double a, double b);

double sample_normal(Rng& rng, double mean, double stddev);

std::string rng_state(const Rng& rng);
void set_rng_state(Rng& rng, const std::string& state);

}  // namespace activeeval
