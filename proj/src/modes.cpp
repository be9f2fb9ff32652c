#include "qawg/modes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fft.hpp"

namespace qawg::modes {
namespace {

constexpr double kCommensurateTol = 1e-6;
constexpr std::size_t kMinSamplesPerBin = 16;

std::ptrdiff_t whole_samples(double ratio, const char* what) {
    const double r = std::round(ratio);
    if (std::abs(ratio - r) > kCommensurateTol * std::max(1.0, std::abs(ratio))) {
        std::ostringstream os;
        os << what << " is not a whole number of samples (ratio " << ratio << ")";
        throw PreconditionError(os.str());
    }
    return static_cast<std::ptrdiff_t>(r);
}

void require_same_grid(const ModeFunction& a, const ModeFunction& b) {
    if (!a.grid().same_as(b.grid())) throw PreconditionError("mode functions live on different time grids");
}

// Shared front half of the two constructors: checks resolution and span, and
// returns the first-bin samples of exp(gamma t) starting at t = 0.
std::vector<double> exponential_bin(const WaveformParams& params, const TimeGrid& grid, double span_before,
                                    double span_after) {
    params.validate();
    const double per_bin = params.delta_t / grid.dt();
    if (per_bin < static_cast<double>(kMinSamplesPerBin)) {
        std::ostringstream os;
        os << "grid too coarse: " << per_bin << " samples per bin, need at least " << kMinSamplesPerBin;
        throw PreconditionError(os.str());
    }
    if (grid.t0() > -span_before * (1.0 - 1e-9) || grid.t_end() < span_after * (1.0 - 1e-9)) {
        std::ostringstream os;
        os << "grid [" << grid.t0() << ", " << grid.t_end() << ") does not span [" << -span_before << ", " << span_after
           << "]";
        throw PreconditionError(os.str());
    }
    const auto k = static_cast<std::size_t>(whole_samples(per_bin, "bin duration"));
    std::vector<double> bin(k);
    for (std::size_t j = 0; j < k; ++j) bin[j] = std::exp(params.gamma * static_cast<double>(j) * grid.dt());
    return bin;
}

}  // namespace

TimeGrid::TimeGrid(double t0, double dt, std::size_t n_samples) : t0_(t0), dt_(dt), n_(n_samples) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("time grid needs dt > 0");
    if (n_samples < 2) throw PreconditionError("time grid needs at least 2 samples");
    if (!std::isfinite(t0)) throw PreconditionError("time grid origin must be finite");
}

TimeGrid TimeGrid::standard() { return TimeGrid(-64e-9, 0.25e-9, 1024); }

double TimeGrid::domega() const { return 2.0 * kPi / (static_cast<double>(n_) * dt_); }

double TimeGrid::omega(std::size_t k) const {
    return (static_cast<double>(k) - static_cast<double>(n_ / 2)) * domega();
}

std::size_t TimeGrid::zero_index() const {
    const auto i = whole_samples(-t0_ / dt_, "grid origin");
    if (i < 0 || static_cast<std::size_t>(i) >= n_) throw PreconditionError("t = 0 lies outside the time grid");
    return static_cast<std::size_t>(i);
}

std::size_t TimeGrid::samples_in(double duration) const {
    const auto k = whole_samples(duration / dt_, "duration");
    if (k < 0) throw PreconditionError("negative duration");
    return static_cast<std::size_t>(k);
}

bool TimeGrid::same_as(const TimeGrid& other) const {
    return n_ == other.n_ && std::abs(dt_ - other.dt_) <= 1e-12 * dt_ && std::abs(t0_ - other.t0_) <= 1e-9 * dt_;
}

void WaveformParams::validate() const {
    if (!(gamma > 0.0)) throw PreconditionError("waveform decay rate must be positive");
    if (!(delta_t > 0.0)) throw PreconditionError("bin duration must be positive");
}

ModeFunction::ModeFunction(TimeGrid grid, std::vector<cplx> values, std::string label)
    : grid_(grid), values_(std::move(values)), label_(std::move(label)) {
    if (values_.size() != grid_.size()) throw PreconditionError("mode function length does not match its grid");
}

double ModeFunction::norm() const {
    double s = 0.0;
    for (const auto& v : values_) s += std::norm(v);
    return std::sqrt(s * grid_.dt());
}

bool ModeFunction::is_real(double tol) const {
    return std::all_of(values_.begin(), values_.end(), [tol](const cplx& v) { return std::abs(v.imag()) <= tol; });
}

ModeFunction ModeFunction::normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw PreconditionError("cannot normalize a zero mode function");
    return scaled(1.0 / n);
}

ModeFunction ModeFunction::conjugated() const {
    std::vector<cplx> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [](const cplx& x) { return std::conj(x); });
    return ModeFunction(grid_, std::move(v), label_ + "*");
}

ModeFunction ModeFunction::scaled(cplx factor) const {
    std::vector<cplx> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [factor](const cplx& x) { return x * factor; });
    return ModeFunction(grid_, std::move(v), label_);
}

ModeFunction ModeFunction::with_label(std::string label) const { return ModeFunction(grid_, values_, std::move(label)); }

std::vector<cplx> ModeFunction::spectrum() const {
    const std::size_t n = grid_.size();
    const std::size_t half = n / 2;
    const auto x = detail::dft(values_, detail::FftDirection::kForward);
    std::vector<cplx> out(n);
    const double scale = grid_.dt() / std::sqrt(2.0 * kPi);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t m = (k + n - half) % n;
        out[k] = scale * std::polar(1.0, -grid_.omega(k) * grid_.t0()) * x[m];
    }
    return out;
}

cplx ModeFunction::spectrum_at(double omega) const {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) acc += values_[i] * std::polar(1.0, -omega * grid_.time(i));
    return acc * grid_.dt() / std::sqrt(2.0 * kPi);
}

ModeFunction ModeFunction::rebinned(const TimeGrid& coarse) const {
    const auto factor = whole_samples(coarse.dt() / grid_.dt(), "coarse sampling interval");
    const auto offset = whole_samples((coarse.t0() - grid_.t0()) / grid_.dt(), "coarse grid origin");
    if (factor < 1 || offset < 0 ||
        static_cast<std::size_t>(offset) + coarse.size() * static_cast<std::size_t>(factor) > grid_.size()) {
        throw PreconditionError("coarse grid is not contained in the fine grid");
    }
    std::vector<cplx> v(coarse.size());
    for (std::size_t j = 0; j < coarse.size(); ++j) {
        cplx acc = 0.0;
        const std::size_t start = static_cast<std::size_t>(offset) + j * static_cast<std::size_t>(factor);
        for (std::ptrdiff_t i = 0; i < factor; ++i) acc += values_[start + static_cast<std::size_t>(i)];
        v[j] = acc / static_cast<double>(factor);
    }
    return ModeFunction(coarse, std::move(v), label_).normalized();
}

std::vector<cplx> from_spectrum(const TimeGrid& grid, std::span<const cplx> spectrum) {
    const std::size_t n = grid.size();
    if (spectrum.size() != n) throw PreconditionError("spectrum length does not match grid");
    const std::size_t half = n / 2;
    std::vector<cplx> y(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t m = (k + n - half) % n;
        y[m] = spectrum[k] * std::polar(1.0, grid.omega(k) * grid.t0());
    }
    auto out = detail::dft(y, detail::FftDirection::kBackward);
    const double scale = grid.domega() / std::sqrt(2.0 * kPi);
    for (auto& v : out) v *= scale;
    return out;
}

ModeFunction make_time_bin(const WaveformParams& params, const TimeGrid& grid) {
    const auto bin = exponential_bin(params, grid, params.delta_t, 2.0 * params.delta_t);
    const std::size_t z = grid.zero_index();
    std::vector<cplx> v(grid.size(), 0.0);
    for (std::size_t j = 0; j < bin.size(); ++j) v[z + j] = bin[j];
    return ModeFunction(grid, std::move(v), "time_bin").normalized();
}

ModeFunction make_balanced_time_bin(const WaveformParams& params, const TimeGrid& grid) {
    const auto bin = exponential_bin(params, grid, params.delta_t, 3.0 * params.delta_t);
    const std::size_t z = grid.zero_index();
    const std::size_t k = bin.size();
    std::vector<cplx> v(grid.size(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        v[z + j] = bin[j];
        v[z + k + j] = -bin[j];
    }
    return ModeFunction(grid, std::move(v), "balanced_time_bin").normalized();
}

cplx inner_product(const ModeFunction& a, const ModeFunction& b) {
    require_same_grid(a, b);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc * a.grid().dt();
}

double mode_match(const ModeFunction& a, const ModeFunction& b) {
    const double m = std::norm(inner_product(a, b));
    return std::min(m, 1.0);
}

ModeFunction shifted(const ModeFunction& f, std::ptrdiff_t samples) {
    const auto n = static_cast<std::ptrdiff_t>(f.size());
    std::vector<cplx> v(f.size(), 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t j = i - samples;
        if (j >= 0 && j < n) v[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(j)];
    }
    return ModeFunction(f.grid(), std::move(v), f.label());
}

std::vector<ModeFunction> complete_basis(const ModeFunction& f, std::size_t k) {
    const TimeGrid& grid = f.grid();
    const std::size_t n = grid.size();
    if (k == 0 || k > n) throw PreconditionError("basis size must be between 1 and the number of grid samples");

    const ModeFunction f0 = f.normalized();
    const bool real = f0.is_real();
    const double w = std::sqrt(grid.dt());

    std::vector<CVector> basis;
    basis.reserve(k);
    {
        CVector v(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = f0[i] * w;
        basis.push_back(v);
    }

    // Modified Gram-Schmidt, applied twice.
    auto try_add = [&](CVector c) {
        const double n0 = c.norm();
        if (!(n0 > 0.0)) return;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) c -= b * b.dot(c);
        const double n1 = c.norm();
        if (n1 < 1e-6 * n0) return;
        basis.push_back(c / n1);
    };

    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(f0[i]));
    std::size_t lo = n, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(f0[i]) > 1e-12 * peak) {
            lo = std::min(lo, i);
            hi = std::max(hi, i);
        }
    }
    const std::size_t width = hi - lo + 1;

    // Modulated copies localized on the support of f.
    for (std::size_t m = 1; m <= width && basis.size() < k; ++m) {
        for (int phase = 0; phase < 2 && basis.size() < k; ++phase) {
            CVector c(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) {
                const double arg = kPi * static_cast<double>(m) * (static_cast<double>(i) - static_cast<double>(lo)) /
                                   static_cast<double>(width);
                const cplx mod = real ? cplx(phase == 0 ? std::sin(arg) : std::cos(arg), 0.0)
                                      : std::polar(1.0, phase == 0 ? arg : -arg);
                c(static_cast<Eigen::Index>(i)) = f0[i] * mod * w;
            }
            try_add(std::move(c));
        }
    }
    // Shifted copies by whole support widths.
    for (std::size_t j = 1; j * width < n && basis.size() < k; ++j) {
        for (int sign = 1; sign >= -1 && basis.size() < k; sign -= 2) {
            const auto s = shifted(f0, sign * static_cast<std::ptrdiff_t>(j * width));
            CVector c(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) c(static_cast<Eigen::Index>(i)) = s[i] * w;
            try_add(std::move(c));
        }
    }
    // Canonical sample vectors guarantee completion.
    for (std::size_t i = 0; i < n && basis.size() < k; ++i) {
        CVector c = CVector::Zero(static_cast<Eigen::Index>(n));
        c(static_cast<Eigen::Index>(i)) = 1.0;
        try_add(std::move(c));
    }
    if (basis.size() < k) throw PhysicsError("basis completion stalled");

    std::vector<ModeFunction> out;
    out.reserve(k);
    out.push_back(f0);
    for (std::size_t l = 1; l < k; ++l) {
        std::vector<cplx> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = basis[l](static_cast<Eigen::Index>(i)) / w;
            if (real) v[i] = cplx(v[i].real(), 0.0);
        }
        out.emplace_back(grid, std::move(v), f0.label() + "_perp" + std::to_string(l));
    }
    return out;
}

}  // namespace qawg::modes
