#pragma once

#include <qpq/random.hpp>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace qpq::harness {

// Runs fn(rng, index) for every trial index, each with its own stream
// trial_rng(seed, index). Results come back in index order, so the reduction
// that follows is identical for any worker count.
template <class Result, class Fn>
std::vector<Result> run_trials(std::size_t trials, std::size_t workers, std::uint64_t seed, Fn&& fn) {
    std::vector<Result> results(trials);
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(trials, 1));

    auto body = [&](std::size_t first, std::exception_ptr& failure) {
        try {
            for (std::size_t j = first; j < trials; j += workers) {
                auto rng = trial_rng(seed, j);
                results[j] = fn(rng, j);
            }
        } catch (...) {
            failure = std::current_exception();
        }
    };

    std::vector<std::exception_ptr> failures(workers);
    if (workers == 1) {
        body(0, failures[0]);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body, w, std::ref(failures[w]));
    }
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);
    return results;
}

} // namespace qpq::harness
