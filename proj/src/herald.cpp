#include "qawg/herald.hpp"

#include <cmath>
#include <sstream>

namespace qawg::herald {
namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError(std::string(name) + " must lie in [0, 1]");
}

// sqrt(binomial(n, k) eta^(n-k) (1-eta)^k), evaluated in logs.
double loss_amplitude(std::size_t n, std::size_t k, double eta) {
    if (k > n) return 0.0;
    if (eta == 1.0) return k == 0 ? 1.0 : 0.0;
    if (eta == 0.0) return k == n ? 1.0 : 0.0;
    const double lb = std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1);
    return std::exp(0.5 * (lb + double(n - k) * std::log(eta) + double(k) * std::log1p(-eta)));
}

HeraldedState with_loss(const HeraldedState& hs, double eta, double fake, const ImperfectionModel& imp) {
    HeraldedState out = hs;
    const CMatrix lossy = loss_channel(hs.rho, eta);
    out.background = loss_channel(hs.background, eta);
    out.rho = (1.0 - fake) * lossy + fake * out.background;
    out.rho = 0.5 * (out.rho + out.rho.adjoint()).eval();
    out.provenance.imperfections = imp;
    return out;
}

}  // namespace

std::size_t FockAmplitudes::flat_index(std::span<const std::size_t> n) const {
    if (n.size() != modes) throw PreconditionError("Fock index has the wrong number of modes");
    std::size_t flat = 0;
    for (auto v : n) {
        if (v > cutoff) throw PreconditionError("Fock index exceeds the cutoff");
        flat = flat * (cutoff + 1) + v;
    }
    return flat;
}

FockAmplitudes fock_amplitudes(const gaussian::GaussianState& state, std::size_t cutoff, double tail_tolerance) {
    const std::size_t m = state.mode_count();
    if (m == 0 || m > kMaxFockModes) throw PreconditionError("Fock expansion supports 1 to 3 modes");
    if (cutoff > kMaxCutoff) throw PreconditionError("Fock cutoff above 30 is not supported");
    if (std::abs(state.purity_determinant() - 1.0) > 1e-8)
        throw PreconditionError("Fock amplitudes need a pure Gaussian state (det(2 cov) = 1)");

    const Index mi = idx(m);
    // Complex covariance in the (a, a^dag) ordering and the Husimi matrix.
    CMatrix w(2 * mi, 2 * mi);
    const CMatrix eye = CMatrix::Identity(mi, mi);
    const cplx i1(0.0, 1.0);
    w << eye, i1 * eye, eye, -i1 * eye;
    w /= std::sqrt(2.0);
    const CMatrix sigma = w * state.cov().cast<cplx>() * w.adjoint();
    const CMatrix q = sigma + 0.5 * CMatrix::Identity(2 * mi, 2 * mi);
    const CMatrix qinv = q.inverse();
    // The state is C exp(a^dag B a^dag / 2 + gamma.a^dag)|0> with B the (a, a)
    // block of -Q^-1.
    const CMatrix b = -qinv.topRightCorner(mi, mi);

    CVector beta(mi);
    for (std::size_t i = 0; i < m; ++i) beta(idx(i)) = state.mean_amplitude(i);
    const CVector gamma = beta - b * beta.conjugate();
    const cplx log_c0 = -0.5 * beta.squaredNorm() + 0.5 * (beta.conjugate().transpose() * b * beta.conjugate())(0, 0);
    const double det_q = std::abs(q.determinant());

    FockAmplitudes amps;
    amps.cutoff = cutoff;
    amps.modes = m;
    for (const auto& s : state.modes()) amps.labels.push_back(std::to_string(s.channel) + ":" + s.label);
    const std::size_t dim = cutoff + 1;
    std::size_t total = 1;
    for (std::size_t i = 0; i < m; ++i) total *= dim;
    amps.tensor.assign(total, 0.0);

    std::vector<std::size_t> stride(m, 1);
    for (std::size_t i = m - 1; i > 0; --i) stride[i - 1] = stride[i] * dim;

    amps.tensor[0] = std::pow(det_q, -0.25) * std::exp(log_c0);
    // Entries in flat order: every predecessor n - e_j has a smaller flat index.
    std::vector<std::size_t> n(m, 0);
    for (std::size_t flat = 1; flat < total; ++flat) {
        std::size_t rem = flat;
        for (std::size_t i = 0; i < m; ++i) {
            n[i] = rem / stride[i];
            rem %= stride[i];
        }
        // Raise along the last mode with a nonzero count.
        std::size_t k = m - 1;
        while (n[k] == 0) --k;
        const std::size_t prev = flat - stride[k];
        cplx acc = gamma(idx(k)) * amps.tensor[prev];
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t nj = (j == k) ? n[j] - 1 : n[j];
            if (nj == 0) continue;
            acc += b(idx(k), idx(j)) * std::sqrt(double(nj)) * amps.tensor[prev - stride[j]];
        }
        amps.tensor[flat] = acc / std::sqrt(double(n[k]));
    }

    double mass = 0.0;
    for (const auto& c : amps.tensor) mass += std::norm(c);
    amps.tail = std::max(0.0, 1.0 - mass);
    if (amps.tail > tail_tolerance) {
        std::ostringstream os;
        os << "Fock truncation at cutoff " << cutoff << " leaves tail mass " << amps.tail << " (tolerance "
           << tail_tolerance << "); increase the cutoff";
        throw TruncationError(os.str());
    }
    return amps;
}

void ImperfectionModel::validate() const {
    check_unit(eta_state, "eta_state");
    check_unit(eta_tap, "eta_tap");
    check_unit(eta_snspd, "eta_snspd");
    check_unit(fake_rate_fraction, "fake_rate_fraction");
    check_unit(eta_homodyne, "eta_homodyne");
    check_unit(eta_tap_chain, "eta_tap_chain");
}

ImperfectionModel ImperfectionModel::ideal() {
    ImperfectionModel m;
    m.eta_state = 1.0;
    m.eta_homodyne = 1.0;
    m.eta_snspd = 1.0;
    m.fake_rate_fraction = 0.0;
    return m;
}

HeraldedState herald_project(const FockAmplitudes& amps, std::span<const std::size_t> pattern,
                             const std::string& filter_label) {
    if (pattern.size() + 1 != amps.modes)
        throw PreconditionError("herald pattern must list one photon number per ancilla mode");
    for (auto p : pattern)
        if (p > amps.cutoff) throw PreconditionError("herald pattern exceeds the Fock cutoff");

    const std::size_t dim = amps.cutoff + 1;
    std::size_t block = 1;
    for (std::size_t i = 1; i < amps.modes; ++i) block *= dim;

    std::size_t offset = 0;
    for (auto p : pattern) offset = offset * dim + p;
    CVector v(idx(dim));
    for (std::size_t n1 = 0; n1 < dim; ++n1) v(idx(n1)) = amps.tensor[n1 * block + offset];
    const double p = v.squaredNorm();
    if (!(p >= 1e-30)) throw PhysicsError("impossible herald pattern (probability below 1e-30)");

    HeraldedState hs;
    hs.rho = v * v.adjoint() / p;
    hs.p_success = p;
    hs.background = CMatrix::Zero(idx(dim), idx(dim));
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) {
            cplx acc = 0.0;
            for (std::size_t r = 0; r < block; ++r)
                acc += amps.tensor[a * block + r] * std::conj(amps.tensor[b * block + r]);
            hs.background(idx(a), idx(b)) = acc;
        }
    hs.background /= hs.background.trace().real();
    hs.provenance.pattern.assign(pattern.begin(), pattern.end());
    hs.provenance.filter_label = filter_label;
    return hs;
}

HeraldedState photon_subtract(double r, double tap, std::size_t n, std::size_t cutoff, const std::string& filter_label) {
    if (!(tap > 0.0 && tap < 1.0)) throw PreconditionError("tap reflectance must lie strictly between 0 and 1");
    using namespace gaussian;
    auto state = GaussianState::vacuum({{1, "f", std::nullopt}, {2, "f", std::nullopt}});
    state = squeeze_mode(state, {1, "f"}, r);
    state = beam_split(state, BeamSplitterSpec::with_reflectance(tap), 1, 2);
    const std::size_t pattern[] = {n};
    return herald_project(fock_amplitudes(state, cutoff), pattern, filter_label);
}

CMatrix loss_channel(const CMatrix& rho, double eta) {
    check_unit(eta, "loss transmission");
    const std::size_t dim = static_cast<std::size_t>(rho.rows());
    CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
    for (std::size_t m = 0; m < dim; ++m)
        for (std::size_t n = 0; n < dim; ++n) {
            cplx acc = 0.0;
            for (std::size_t k = 0; m + k < dim && n + k < dim; ++k)
                acc += loss_amplitude(m + k, k, eta) * loss_amplitude(n + k, k, eta) * rho(idx(m + k), idx(n + k));
            out(idx(m), idx(n)) = acc;
        }
    return out;
}

HeraldedState apply_imperfections(const HeraldedState& hs, const ImperfectionModel& imp) {
    imp.validate();
    return with_loss(hs, imp.eta_total(), imp.fake_rate_fraction, imp);
}

HeraldedState apply_source_imperfections(const HeraldedState& hs, const ImperfectionModel& imp) {
    imp.validate();
    return with_loss(hs, imp.eta_state, imp.fake_rate_fraction, imp);
}

double success_rate(const HeraldedState& hs, double bandwidth_hz, const ImperfectionModel& imp) {
    if (!(bandwidth_hz > 0.0)) throw PreconditionError("bandwidth must be positive");
    imp.validate();
    return hs.p_success * bandwidth_hz * imp.eta_tap_chain * imp.eta_snspd;
}

double trace_defect(const CMatrix& rho) { return std::abs(rho.trace() - cplx(1.0)); }

double hermiticity_defect(const CMatrix& rho) { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

double min_eigenvalue(const CMatrix& rho) {
    const CMatrix h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double parity(const CMatrix& rho) {
    double s = 0.0;
    for (Index n = 0; n < rho.rows(); ++n) s += (n % 2 == 0 ? 1.0 : -1.0) * rho(n, n).real();
    return s;
}

}  // namespace qawg::herald
