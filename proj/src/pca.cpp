#include <algorithm>
#include <cmath>

#include <omp.h>

#include "qawg/analysis.hpp"

namespace qawg::analysis {
namespace {

using Index = Eigen::Index;

// Sum of x x^T over every event of every block.
RMatrix second_moment_sum(std::span<const RecordBlock> blocks, Index d, Execution exec) {
    RMatrix total = RMatrix::Zero(d, d);
    if (exec == Execution::serial) {
        for (const auto& b : blocks)
            for (Index e = 0; e < b.traces.rows(); ++e) {
                const RVector x = b.traces.row(e).transpose();
                total.selfadjointView<Eigen::Lower>().rankUpdate(x);
            }
    } else {
        // Per-thread partial sums combined in thread order, so a fixed thread
        // count gives reproducible bits.
        std::vector<RMatrix> parts(std::size_t(omp_get_max_threads()), RMatrix::Zero(d, d));
        for (const auto& b : blocks) {
            const long n = static_cast<long>(b.traces.rows());
#pragma omp parallel
            {
                RMatrix& part = parts[std::size_t(omp_get_thread_num())];
#pragma omp for schedule(static)
                for (long e = 0; e < n; ++e) {
                    const RVector x = b.traces.row(e).transpose();
                    part.selfadjointView<Eigen::Lower>().rankUpdate(x);
                }
            }
        }
        for (const auto& part : parts) total += part;
    }
    return total.selfadjointView<Eigen::Lower>();
}

void check_blocks(std::span<const RecordBlock> blocks, const modes::TimeGrid& grid, const char* what) {
    for (const auto& b : blocks)
        if (!b.grid.same_as(grid)) throw PreconditionError(std::string(what) + " do not share one time grid");
}

std::size_t count_events(std::span<const RecordBlock> blocks) {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.events();
    return n;
}

}  // namespace

PcaResult pca_estimate(std::span<const RecordBlock> records, std::span<const RecordBlock> vacuum_refs, Execution exec) {
    if (records.empty() || count_events(records) < kMinPcaRecords)
        throw PreconditionError("PCA needs at least 100 records");
    if (vacuum_refs.empty() || count_events(vacuum_refs) == 0) throw PreconditionError("PCA needs vacuum reference records");
    const modes::TimeGrid grid = records.front().grid;
    check_blocks(records, grid, "records");
    check_blocks(vacuum_refs, grid, "vacuum references");
    const Index d = Index(grid.size());

    const RMatrix c = second_moment_sum(records, d, exec) / double(count_events(records));
    const RMatrix cv = second_moment_sum(vacuum_refs, d, exec) / double(count_events(vacuum_refs));
    const double vacuum = cv.trace() / double(d);
    if (!(vacuum > 0.0)) throw PreconditionError("vacuum references carry no variance");

    Eigen::SelfAdjointEigenSolver<RMatrix> es(c);
    PcaResult out;
    const double w = std::sqrt(grid.dt());
    for (Index k = d - 1; k >= 0; --k) {
        out.eigenvalues.push_back(es.eigenvalues()(k) / vacuum);
        RVector v = es.eigenvectors().col(k);
        const double peak = v.cwiseAbs().maxCoeff();
        for (Index j = 0; j < d; ++j)
            if (std::abs(v(j)) > 0.5 * peak) {
                if (v(j) < 0.0) v = -v;
                break;
            }
        std::vector<cplx> values(static_cast<std::size_t>(d));
        for (Index j = 0; j < d; ++j) values[std::size_t(j)] = v(j) / w;
        out.eigenfunctions.emplace_back(grid, std::move(values), "pc" + std::to_string(d - k));
    }
    if (d >= 3) {
        out.gap = out.eigenvalues[0] - out.eigenvalues[1];
        double mean = 0.0;
        for (std::size_t i = 1; i < out.eigenvalues.size(); ++i) mean += out.eigenvalues[i];
        mean /= double(d - 1);
        double var = 0.0;
        for (std::size_t i = 1; i < out.eigenvalues.size(); ++i) var += std::pow(out.eigenvalues[i] - mean, 2);
        out.bulk_spread = std::sqrt(var / double(d - 2));
        out.mode_identified = out.gap > 5.0 * out.bulk_spread;
    }
    return out;
}

modes::ModeFunction estimate_waveform(std::span<const PcaResult> per_phase) {
    if (per_phase.size() < 2) throw PreconditionError("waveform estimation needs at least 2 phases");
    const modes::ModeFunction& ref = per_phase.front().eigenfunctions.at(0);
    std::vector<cplx> acc(ref.size(), 0.0);
    for (const auto& r : per_phase) {
        const modes::ModeFunction& f = r.eigenfunctions.at(0);
        const cplx o = modes::inner_product(ref, f);
        const cplx align = std::abs(o) > 0.0 ? std::conj(o) / std::abs(o) : cplx(1.0);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += align * f[j];
    }
    return modes::ModeFunction(ref.grid(), std::move(acc), "pca-average").normalized();
}

}  // namespace qawg::analysis
