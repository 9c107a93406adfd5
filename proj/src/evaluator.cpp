#include "hsvi/evaluator.hpp"

#include "hsvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

namespace hsvi {

namespace {

using Rng = std::mt19937_64;

template <class Weights, class Weight>
std::size_t draw(Rng& rng, const Weights& items, Weight weight) {
    const double u = std::generate_canonical<double, 64>(rng);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const double w = weight(items[i]);
        if (w <= 0.0) {
            continue;
        }
        acc += w;
        last = i;
        if (u < acc) {
            return i;
        }
    }
    // Rounding left u above the accumulated total.
    return last;
}

bool absorbing_without_reward(const PomdpModel& model, int s) {
    for (int a = 0; a < model.num_actions(); ++a) {
        if (model.reward(s, a) != 0.0) {
            return false;
        }
        const auto next = model.transitions(s, a);
        if (next.size() != 1 || next[0].next_state != s) {
            return false;
        }
    }
    return true;
}

} // namespace

void EvalConfig::validate() const {
    if (episodes < 1) {
        throw InvalidParams("episode count must be at least 1");
    }
    if (horizon < 1) {
        throw InvalidParams("horizon must be at least 1");
    }
    if (jobs < 1) {
        throw InvalidParams("jobs must be at least 1");
    }
    if (max_resamples < 0) {
        throw InvalidParams("resample limit must be non-negative");
    }
}

int policy_action(const LowerBound& lb, const Belief& b) {
    if (lb.size() == 0) {
        throw InvalidParams("policy has no alpha vectors");
    }
    return lb.best(b).action;
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode, std::uint64_t attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double simulate_episode(const PomdpModel& model, const LowerBound& lb, const EvalConfig& config,
                        std::uint64_t seed) {
    Rng rng(seed);
    Belief b = model.initial_belief();
    const auto start = b.entries();
    int s = start[draw(rng, start, [](const BeliefEntry& e) { return e.mass; })].state;

    const double gamma = config.discounted ? model.discount() : 1.0;
    double total = 0.0;
    double weight = 1.0;
    for (int t = 0; t < config.horizon; ++t) {
        if (absorbing_without_reward(model, s)) {
            break;
        }
        const int a = policy_action(lb, b);
        total += weight * model.reward(s, a);
        weight *= gamma;

        const auto next = model.transitions(s, a);
        const int s2 = next[draw(rng, next, [](const Transition& tr) { return tr.probability; })].next_state;
        const auto row = model.observation_row(s2, a);
        const int o = static_cast<int>(draw(rng, row, [](double p) { return p; }));
        b = belief_update(model, b, a, o);
        s = s2;
    }
    return total;
}

EvalResult evaluate(const PomdpModel& model, const LowerBound& lb, const EvalConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.episodes);
    EvalResult result;
    result.returns.assign(n, 0.0);
    std::vector<int> redraws(n, 0);

    auto run_range = [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            for (int attempt = 0;; ++attempt) {
                try {
                    result.returns[i] = simulate_episode(model, lb, config, episode_seed(config.seed, i,
                                                                                        static_cast<std::uint64_t>(attempt)));
                    break;
                } catch (const ZeroProbabilityObservation&) {
                    if (attempt >= config.max_resamples) {
                        throw;
                    }
                    ++redraws[i];
                }
            }
        }
    };

    const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), n);
    if (jobs <= 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(jobs);
        for (std::size_t j = 0; j < jobs; ++j) {
            workers.emplace_back([&, j] {
                try {
                    run_range(n * j / jobs, n * (j + 1) / jobs);
                } catch (...) {
                    errors[j] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    for (int r : redraws) {
        result.resampled += r;
    }
    double sum = 0.0;
    for (double r : result.returns) {
        sum += r;
    }
    // Clamp away last-bit rounding so the mean stays inside the sample range.
    const auto [lo, hi] = std::minmax_element(result.returns.begin(), result.returns.end());
    result.mean = std::clamp(sum / static_cast<double>(n), *lo, *hi);
    if (n > 1) {
        double ss = 0.0;
        for (double r : result.returns) {
            ss += (r - result.mean) * (r - result.mean);
        }
        result.std_error = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
        result.std_error_defined = true;
    }
    result.half_width = 1.96 * result.std_error;

    const double gamma = model.discount();
    if (config.discounted && gamma < 1.0) {
        result.truncation_bound = std::pow(gamma, config.horizon) * model.max_abs_reward() / (1.0 - gamma);
    }
    return result;
}

} // namespace hsvi
