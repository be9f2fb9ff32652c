#include "qawg/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace qawg::gaussian {
namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

RMatrix symmetrized(const RMatrix& m) { return 0.5 * (m + m.transpose()); }

std::vector<modes::ModeFunction> channel_waveforms(const GaussianState& state, const std::vector<std::size_t>& ids) {
    std::vector<modes::ModeFunction> out;
    for (auto i : ids) {
        const auto& slot = state.modes()[i];
        if (!slot.waveform) throw PreconditionError("mode '" + slot.label + "' has no registered waveform");
        out.push_back(*slot.waveform);
    }
    return out;
}

// M_lm = <g_m, partner(f_l)>: the pair-creation amplitudes of a squeezing
// kernel between two mode sets.
CMatrix pair_matrix(const std::vector<modes::ModeFunction>& f, const std::vector<modes::ModeFunction>& g,
                    const SqueezingSpectrum& r) {
    CMatrix m(idx(f.size()), idx(g.size()));
    for (std::size_t l = 0; l < f.size(); ++l) {
        const auto u = pair_partner(f[l], r);
        for (std::size_t k = 0; k < g.size(); ++k) m(idx(l), idx(k)) = modes::inner_product(g[k], u);
    }
    return m;
}

}  // namespace

GaussianState GaussianState::vacuum(std::vector<ModeSlot> modes) {
    const auto m = modes.size();
    return GaussianState(std::move(modes), RVector::Zero(idx(2 * m)), 0.5 * RMatrix::Identity(idx(2 * m), idx(2 * m)));
}

GaussianState::GaussianState(std::vector<ModeSlot> modes, RVector mean, RMatrix cov)
    : modes_(std::move(modes)), mean_(std::move(mean)), cov_(std::move(cov)) {
    const auto n = idx(2 * modes_.size());
    if (mean_.size() != n || cov_.rows() != n || cov_.cols() != n)
        throw PreconditionError("Gaussian state moments do not match its mode count");
    for (std::size_t i = 0; i < modes_.size(); ++i)
        for (std::size_t j = i + 1; j < modes_.size(); ++j)
            if (modes_[i].channel == modes_[j].channel && modes_[i].label == modes_[j].label)
                throw PreconditionError("duplicate mode '" + modes_[i].label + "' on channel " +
                                        std::to_string(modes_[i].channel));
}

std::size_t GaussianState::index_of(const ModeRef& ref) const {
    for (std::size_t i = 0; i < modes_.size(); ++i)
        if (modes_[i].channel == ref.channel && modes_[i].label == ref.label) return i;
    throw PreconditionError("unknown mode '" + ref.label + "' on channel " + std::to_string(ref.channel));
}

std::vector<std::size_t> GaussianState::channel_modes(int channel) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < modes_.size(); ++i)
        if (modes_[i].channel == channel) out.push_back(i);
    return out;
}

cplx GaussianState::mean_amplitude(std::size_t mode) const {
    const auto m = modes_.size();
    return cplx(mean_(idx(mode)), mean_(idx(m + mode))) / std::sqrt(2.0);
}

double GaussianState::mean_photon_number() const {
    const auto m = modes_.size();
    double n = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x2 = cov_(idx(i), idx(i)) + mean_(idx(i)) * mean_(idx(i));
        const double p2 = cov_(idx(m + i), idx(m + i)) + mean_(idx(m + i)) * mean_(idx(m + i));
        n += 0.5 * (x2 + p2 - 1.0);
    }
    return n;
}

double GaussianState::purity_determinant() const { return (2.0 * cov_).determinant(); }

double GaussianState::uncertainty_margin() const {
    const auto m = idx(modes_.size());
    CMatrix h = cov_.cast<cplx>();
    for (Index i = 0; i < m; ++i) {
        h(i, m + i) += cplx(0.0, 0.5);
        h(m + i, i) -= cplx(0.0, 0.5);
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

GaussianState GaussianState::reduced(const std::vector<std::size_t>& indices) const {
    const auto m = modes_.size();
    const auto k = indices.size();
    std::vector<ModeSlot> slots;
    std::vector<Index> rows;
    for (auto i : indices) {
        if (i >= m) throw PreconditionError("mode index out of range");
        slots.push_back(modes_[i]);
    }
    for (auto i : indices) rows.push_back(idx(i));
    for (auto i : indices) rows.push_back(idx(m + i));
    RVector mean(idx(2 * k));
    RMatrix cov(idx(2 * k), idx(2 * k));
    for (Index a = 0; a < idx(2 * k); ++a) {
        mean(a) = mean_(rows[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < idx(2 * k); ++b)
            cov(a, b) = cov_(rows[static_cast<std::size_t>(a)], rows[static_cast<std::size_t>(b)]);
    }
    return GaussianState(std::move(slots), std::move(mean), std::move(cov));
}

RMatrix symplectic_from_bogoliubov(const CMatrix& a, const CMatrix& b) {
    const Index m = a.rows();
    RMatrix s(2 * m, 2 * m);
    const CMatrix sum = a + b;
    const CMatrix diff = a - b;
    s.topLeftCorner(m, m) = sum.real();
    s.topRightCorner(m, m) = -diff.imag();
    s.bottomLeftCorner(m, m) = sum.imag();
    s.bottomRightCorner(m, m) = diff.real();
    return s;
}

GaussianState apply_symplectic(const GaussianState& state, const std::vector<std::size_t>& indices, const RMatrix& s) {
    const auto m = state.mode_count();
    const auto k = indices.size();
    if (s.rows() != idx(2 * k) || s.cols() != idx(2 * k)) throw PreconditionError("symplectic block has wrong size");
    std::vector<Index> rows;
    for (auto i : indices) {
        if (i >= m) throw PreconditionError("mode index out of range");
        rows.push_back(idx(i));
    }
    for (auto i : indices) rows.push_back(idx(m + i));
    RMatrix full = RMatrix::Identity(idx(2 * m), idx(2 * m));
    for (std::size_t a = 0; a < 2 * k; ++a)
        for (std::size_t b = 0; b < 2 * k; ++b) full(rows[a], rows[b]) = s(idx(a), idx(b));
    RVector mean = full * state.mean();
    RMatrix cov = symmetrized(full * state.cov() * full.transpose());
    return GaussianState(state.modes(), std::move(mean), std::move(cov));
}

GaussianState apply_pair_generator(const GaussianState& state, const std::vector<std::size_t>& indices,
                                   const CMatrix& z) {
    const Index k = idx(indices.size());
    if (z.rows() != k || z.cols() != k) throw PreconditionError("pair generator has wrong size");
    CMatrix gen = CMatrix::Zero(2 * k, 2 * k);
    const CMatrix zs = 0.5 * (z + z.transpose());
    gen.topRightCorner(k, k) = zs;
    gen.bottomLeftCorner(k, k) = zs.conjugate();
    const CMatrix e = gen.exp();
    return apply_symplectic(state, indices, symplectic_from_bogoliubov(e.topLeftCorner(k, k), e.topRightCorner(k, k)));
}

GaussianState apply_passive(const GaussianState& state, const std::vector<std::size_t>& indices, const CMatrix& u) {
    const Index k = idx(indices.size());
    return apply_symplectic(state, indices, symplectic_from_bogoliubov(u, CMatrix::Zero(k, k)));
}

GaussianState squeeze_mode(const GaussianState& state, const ModeRef& mode, double r) {
    const auto i = state.index_of(mode);
    CMatrix z(1, 1);
    z(0, 0) = -r;
    return apply_pair_generator(state, {i}, z);
}

GaussianState epr_pair(const GaussianState& state, const ModeRef& mode1, const ModeRef& mode2, double r) {
    if (mode1.channel == mode2.channel) throw PreconditionError("EPR pair needs two distinct channels");
    const auto i = state.index_of(mode1);
    const auto j = state.index_of(mode2);
    CMatrix z = CMatrix::Zero(2, 2);
    z(0, 1) = r;
    z(1, 0) = r;
    return apply_pair_generator(state, {i, j}, z);
}

BeamSplitterSpec BeamSplitterSpec::with_reflectance(double reflectance) {
    if (!(reflectance >= 0.0 && reflectance <= 1.0)) throw PreconditionError("reflectance must lie in [0, 1]");
    return BeamSplitterSpec{2.0 * std::asin(std::sqrt(reflectance)), 0.0, 0.0};
}

double BeamSplitterSpec::transmittance() const {
    const double c = std::cos(0.5 * kappa);
    return c * c;
}

CMatrix BeamSplitterSpec::mode_matrix() const {
    auto rotation = [](double phi) {
        CMatrix r = CMatrix::Zero(2, 2);
        r(0, 0) = std::polar(1.0, 0.5 * phi);
        r(1, 1) = std::polar(1.0, -0.5 * phi);
        return r;
    };
    CMatrix mix(2, 2);
    const double c = std::cos(0.5 * kappa);
    const double s = std::sin(0.5 * kappa);
    mix << c, s, -s, c;
    return rotation(nu) * mix * rotation(mu);
}

GaussianState beam_split(const GaussianState& state, const BeamSplitterSpec& spec, int ch1, int ch2) {
    if (ch1 == ch2) throw PreconditionError("beam splitter needs two distinct channels");
    const auto a = state.channel_modes(ch1);
    const auto b = state.channel_modes(ch2);
    if (a.empty() || a.size() != b.size())
        throw PreconditionError("beam-split channels must carry the same number of modes");
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ids.push_back(a[i]);
        ids.push_back(b[i]);
    }
    const CMatrix block = spec.mode_matrix();
    CMatrix u = CMatrix::Zero(idx(ids.size()), idx(ids.size()));
    for (std::size_t i = 0; i < a.size(); ++i) u.block(idx(2 * i), idx(2 * i), 2, 2) = block;
    return apply_passive(state, ids, u);
}

GaussianState displace(const GaussianState& state, const ModeRef& mode, cplx alpha) {
    const auto i = state.index_of(mode);
    const auto m = state.mode_count();
    RVector mean = state.mean();
    mean(idx(i)) += std::sqrt(2.0) * alpha.real();
    mean(idx(m + i)) += std::sqrt(2.0) * alpha.imag();
    return GaussianState(state.modes(), std::move(mean), state.cov());
}

GaussianState displace_monochromatic(const GaussianState& state, int channel, cplx alpha, double omega_d) {
    const auto ids = state.channel_modes(channel);
    if (ids.empty()) throw PreconditionError("channel " + std::to_string(channel) + " has no modes");
    const auto wf = channel_waveforms(state, ids);
    GaussianState out = state;
    for (std::size_t l = 0; l < ids.size(); ++l) {
        const auto& slot = state.modes()[ids[l]];
        out = displace(out, {slot.channel, slot.label}, std::conj(wf[l].spectrum_at(omega_d)) * alpha);
    }
    return out;
}

GaussianState loss(const GaussianState& state, const ModeRef& mode, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw PreconditionError("loss transmission must lie in [0, 1]");
    const auto i = state.index_of(mode);
    const auto m = state.mode_count();
    const double s = std::sqrt(eta);
    RVector scale = RVector::Ones(idx(2 * m));
    scale(idx(i)) = s;
    scale(idx(m + i)) = s;
    RVector mean = state.mean().cwiseProduct(scale);
    RMatrix cov = scale.asDiagonal() * state.cov() * scale.asDiagonal();
    cov(idx(i), idx(i)) += 0.5 * (1.0 - eta);
    cov(idx(m + i), idx(m + i)) += 0.5 * (1.0 - eta);
    return GaussianState(state.modes(), std::move(mean), std::move(cov));
}

SqueezingSpectrum::SqueezingSpectrum(modes::TimeGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    const std::size_t n = grid_.size();
    if (values_.size() != n) throw PreconditionError("squeezing spectrum length does not match its grid");
    double peak = 0.0;
    for (double v : values_) peak = std::max(peak, std::abs(v));
    const auto h = static_cast<std::ptrdiff_t>(n / 2);
    for (std::size_t k = 0; k < n; ++k) {
        const std::ptrdiff_t partner = 2 * h - static_cast<std::ptrdiff_t>(k);
        if (partner < 0 || partner >= static_cast<std::ptrdiff_t>(n)) continue;
        if (std::abs(values_[k] - values_[static_cast<std::size_t>(partner)]) > 1e-12 * std::max(peak, 1e-300))
            throw PreconditionError("squeezing spectrum must be symmetric in omega");
    }
}

SqueezingSpectrum SqueezingSpectrum::flat(const modes::TimeGrid& grid, double r) {
    return SqueezingSpectrum(grid, std::vector<double>(grid.size(), r));
}

SqueezingSpectrum SqueezingSpectrum::gaussian(const modes::TimeGrid& grid, double r, double hwhm) {
    if (!(hwhm > 0.0)) throw PreconditionError("squeezing bandwidth must be positive");
    const double sigma = hwhm / std::sqrt(2.0 * std::log(2.0));
    std::vector<double> v(grid.size());
    const auto h = grid.size() / 2;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        // Evaluate on |k - n/2| so mirror samples are bitwise equal.
        const double w = static_cast<double>(k >= h ? k - h : h - k) * grid.domega();
        v[k] = r * std::exp(-w * w / (2.0 * sigma * sigma));
    }
    return SqueezingSpectrum(grid, std::move(v));
}

std::vector<double> SqueezingSpectrum::kernel() const {
    const modes::TimeGrid lags(0.0, grid_.dt(), grid_.size());
    std::vector<cplx> spec(values_.begin(), values_.end());
    const auto t = modes::from_spectrum(lags, spec);
    std::vector<double> out(t.size());
    const double root = std::sqrt(2.0 * kPi);
    for (std::size_t j = 0; j < t.size(); ++j) out[j] = t[j].real() / root;
    return out;
}

modes::ModeFunction pair_partner(const modes::ModeFunction& f, const SqueezingSpectrum& r) {
    if (!f.grid().same_as(r.grid())) throw PreconditionError("waveform and squeezing spectrum use different grids");
    const auto kern = r.kernel();
    const std::size_t n = f.size();
    const double dt = f.grid().dt();
    std::vector<std::size_t> support;
    for (std::size_t a = 0; a < n; ++a)
        if (f[a] != cplx(0.0)) support.push_back(a);
    std::vector<cplx> u(n, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
        cplx acc = 0.0;
        for (auto a : support) acc += kern[(a + n - b) % n] * std::conj(f[a]);
        u[b] = acc * dt;
    }
    return modes::ModeFunction(f.grid(), std::move(u), f.label() + "_partner");
}

double purity_real(const modes::ModeFunction& f, const SqueezingSpectrum& r) {
    const auto u = pair_partner(f, r);
    const double nu = u.norm();
    if (!(nu > 1e-300)) throw PhysicsError("squeezing kernel annihilates the mode (zero partner norm)");
    return std::min(1.0, std::norm(modes::inner_product(f, u)) / (nu * nu));
}

double purity_complex(const modes::ModeFunction& f, const SqueezingSpectrum& r) {
    const auto u = pair_partner(f, r);
    const double nu = u.norm();
    if (!(nu > 1e-300)) throw PhysicsError("squeezing kernel annihilates the mode (zero partner norm)");
    return std::min(1.0, std::norm(modes::inner_product(f.conjugated(), u)) / (nu * nu));
}

GaussianState squeeze_channel(const GaussianState& state, int channel, const SqueezingSpectrum& r) {
    const auto ids = state.channel_modes(channel);
    if (ids.empty()) throw PreconditionError("channel " + std::to_string(channel) + " has no modes");
    const auto wf = channel_waveforms(state, ids);
    const CMatrix z = -pair_matrix(wf, wf, r);
    return apply_pair_generator(state, ids, z);
}

GaussianState epr_channels(const GaussianState& state, int ch1, int ch2, const SqueezingSpectrum& r) {
    if (ch1 == ch2) throw PreconditionError("EPR source needs two distinct channels");
    const auto a = state.channel_modes(ch1);
    const auto b = state.channel_modes(ch2);
    if (a.empty() || b.empty()) throw PreconditionError("EPR channels must carry modes");
    const CMatrix q = pair_matrix(channel_waveforms(state, a), channel_waveforms(state, b), r);
    std::vector<std::size_t> ids = a;
    ids.insert(ids.end(), b.begin(), b.end());
    const Index na = idx(a.size());
    const Index nb = idx(b.size());
    CMatrix z = CMatrix::Zero(na + nb, na + nb);
    z.topRightCorner(na, nb) = q;
    z.bottomLeftCorner(nb, na) = q.transpose();
    return apply_pair_generator(state, ids, z);
}

double cross_coupling(const GaussianState& state, const std::vector<std::size_t>& block) {
    const auto m = state.mode_count();
    std::vector<bool> in(m, false);
    for (auto i : block) in.at(i) = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!in[i]) continue;
        for (std::size_t j = 0; j < m; ++j) {
            if (in[j]) continue;
            for (std::size_t qi : {i, m + i})
                for (std::size_t qj : {j, m + j}) worst = std::max(worst, std::abs(state.cov()(idx(qi), idx(qj))));
        }
    }
    return worst;
}

}  // namespace qawg::gaussian
