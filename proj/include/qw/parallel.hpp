#ifndef QW_PARALLEL_HPP
#define QW_PARALLEL_HPP

#include <algorithm>
#include <future>
#include <thread>
#include <vector>

namespace qw {

// 0 means one worker per hardware thread.
inline int resolve_workers(int w) {
    if (w > 0) return w;
    unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : static_cast<int>(h);
}

// body(i) for i in [0, count), item i on worker i % workers.  The first
// exception thrown by a worker is rethrown here.
template <class Body>
void parallel_for(int count, int workers, Body body) {
    if (count <= 0) return;
    workers = std::max(1, std::min(resolve_workers(workers), count));
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [=, &body] {
            for (int i = w; i < count; i += workers) body(i);
        }));
    }
    for (auto& j : jobs) j.get();
}

}  // namespace qw

#endif
