#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace spider {

// Apply f to every index in [0, n) on OpenMP workers; results land in index order,
// so anything reduced from them afterwards is independent of the worker count.
// The exception of the lowest failing index is rethrown.
template <class R, class F>
std::vector<R> map_indices(std::size_t n, int workers, F&& f) {
    std::vector<R> out(n);
    std::exception_ptr err;
    std::size_t err_index = n;
    const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (std::size_t k = 0; k < n; ++k) {
        try {
            out[k] = f(k);
        } catch (...) {
#pragma omp critical(spider_map_error)
            if (k < err_index) {
                err_index = k;
                err = std::current_exception();
            }
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

// Serial reference of map_indices.
template <class R, class F>
std::vector<R> map_indices_serial(std::size_t n, F&& f) {
    std::vector<R> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = f(k);
    return out;
}

}  // namespace spider
