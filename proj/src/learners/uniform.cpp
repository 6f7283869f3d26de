#include "variants.hpp"

namespace activeeval::detail {

UniformLearner::UniformLearner(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Learner(std::move(spec), k, seed) {}

Pair UniformLearner::do_select() { return pair_at(k(), uniform_index(rng(), num_pairs(k()))); }

}  // namespace activeeval::detail
