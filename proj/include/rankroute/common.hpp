#pragma once
// Shared plumbing: deterministic RNG, fingerprinting, parallel execution policy.

#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rr {

// Deterministic RNG. mt19937_64 state evolution is fully specified by the
// standard; the value transforms below are ours, so streams are reproducible
// across compilers given the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1) with 53 bits of entropy
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias is negligible for the n used here (< 2^32)
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    // standard normal via Box-Muller (no cached spare; keeps the stream simple)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool coin(double p_true = 0.5) { return uniform() < p_true; }

    // derive an independent stream; used to give each subsystem its own seed
    Rng fork(std::uint64_t salt) {
        return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// FNV-1a 64-bit; provenance fingerprints, not a cryptographic hash.
inline std::uint64_t fingerprint64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v);
std::string fingerprint_hex(std::string_view bytes);
// fingerprint of a file's contents; throws if the file cannot be read
std::string fingerprint_file(const std::string& path);

// Execution policy for the data-parallel kernels. Serial is the reference
// path; Parallel runs the same loop body under OpenMP. Both must produce
// bit-identical results (loop bodies write disjoint slots only).
enum class Exec { Serial, Parallel };

namespace detail {
template <typename F>
void run_indexed(Exec exec, std::size_t n, F&& body) {
#ifdef _OPENMP
    if (exec == Exec::Parallel && n > 1) {
        std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            try {
                body(static_cast<std::size_t>(i));
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
        return;
    }
#else
    (void)exec;
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}
}  // namespace detail

template <typename F>
void for_each_index(Exec exec, std::size_t n, F&& body) {
    detail::run_indexed(exec, n, std::forward<F>(body));
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace rr
