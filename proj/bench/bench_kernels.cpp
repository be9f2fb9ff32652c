// Wall-clock comparison of the serial and OpenMP versions of the heavy kernels.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "qawg/analysis.hpp"
#include "qawg/scenario.hpp"

namespace {

using namespace qawg;

double seconds(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, const std::function<void(Execution)>& kernel) {
    const double s = seconds([&] { kernel(Execution::serial); });
    const double p = seconds([&] { kernel(Execution::parallel); });
    std::printf("%-22s serial %8.3f s   parallel %8.3f s   speedup %5.2fx\n", name, s, p, s / p);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    scenario::ScenarioConfig cfg;
    cfg.squeezing.r = 0.30;
    const auto h = scenario::herald_state(cfg, true);
    const auto f = scenario::record_mode(cfg);
    const auto opt = scenario::record_options(cfg, h);
    const auto grid = analysis::WignerGrid::covering(15, 201);

    std::vector<analysis::RecordBlock> blocks, vacuum;
    report("wigner 201x201", [&](Execution e) { (void)analysis::wigner(h.measured.rho, grid, e); });
    report("simulate_records", [&](Execution e) { blocks = analysis::simulate_records(h.measured, f, opt, e); });
    report("vacuum_reference", [&](Execution e) {
        vacuum = analysis::simulate_vacuum_reference(f.grid(), opt.n_events, opt.phases, opt.seed, e);
    });
    report("pca_estimate x6", [&](Execution e) {
        for (std::size_t k = 0; k < blocks.size(); ++k)
            (void)analysis::pca_estimate(std::span(blocks).subspan(k, 1), vacuum, e);
    });
    const auto samples = analysis::project_records(blocks, f);
    report("mle_tomography", [&](Execution e) { (void)analysis::mle_tomography(samples, {}, e); });
    return 0;
}
