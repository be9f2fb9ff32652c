#pragma once

// Finite-mode Gaussian states over wave-packet modes on several channels.
//
// Quadrature ordering is xxpp: mean = (x_1..x_M, p_1..p_M), x = (a + a^dag)/sqrt 2,
// vacuum covariance I/2. Operations act in the Heisenberg picture: a unitary
// whose mode transformation is a -> A a + B a^dag maps mean -> S mean and
// cov -> S cov S^T with S the matching real symplectic matrix.

#include <optional>
#include <string>
#include <vector>

#include "qawg/modes.hpp"

namespace qawg::gaussian {

struct ModeSlot {
    int channel;
    std::string label;
    std::optional<modes::ModeFunction> waveform;
};

struct ModeRef {
    int channel;
    std::string label;
};

class GaussianState {
  public:
    static GaussianState vacuum(std::vector<ModeSlot> modes);

    GaussianState(std::vector<ModeSlot> modes, RVector mean, RMatrix cov);

    std::size_t mode_count() const { return modes_.size(); }
    const std::vector<ModeSlot>& modes() const { return modes_; }
    const RVector& mean() const { return mean_; }
    const RMatrix& cov() const { return cov_; }

    std::size_t index_of(const ModeRef& ref) const;
    // Mode indices on a channel in registration order.
    std::vector<std::size_t> channel_modes(int channel) const;

    cplx mean_amplitude(std::size_t mode) const;
    double mean_photon_number() const;
    // det(2 cov); one for pure states.
    double purity_determinant() const;
    // Smallest eigenvalue of cov + (i/2) Omega.
    double uncertainty_margin() const;

    // Marginal state of the listed modes (in the given order).
    GaussianState reduced(const std::vector<std::size_t>& indices) const;

  private:
    std::vector<ModeSlot> modes_;
    RVector mean_;
    RMatrix cov_;
};

// Real symplectic matrix (xxpp, size 2m) of the mode map a -> A a + B a^dag.
RMatrix symplectic_from_bogoliubov(const CMatrix& a, const CMatrix& b);

// Applies a symplectic transformation acting on a subset of modes.
GaussianState apply_symplectic(const GaussianState& state, const std::vector<std::size_t>& indices, const RMatrix& s);

// exp[ (1/2) sum_ij Z_ij a_i^dag a_j^dag - h.c. ] over the listed modes; Z
// complex symmetric. First-order action: a_k -> a_k + sum_l Z_kl a_l^dag.
GaussianState apply_pair_generator(const GaussianState& state, const std::vector<std::size_t>& indices,
                                   const CMatrix& z);

// Passive linear optics a -> U a over the listed modes.
GaussianState apply_passive(const GaussianState& state, const std::vector<std::size_t>& indices, const CMatrix& u);

// r > 0 squeezes x: var(x) -> e^{-2r} var(x).
GaussianState squeeze_mode(const GaussianState& state, const ModeRef& mode, double r);

// Two-mode squeezing between (ch1, f) and (ch2, f*); var(x1 - x2) = e^{-2r} from vacuum.
GaussianState epr_pair(const GaussianState& state, const ModeRef& mode1, const ModeRef& mode2, double r);

struct BeamSplitterSpec {
    double kappa = 0.0;
    double nu = 0.0;
    double mu = 0.0;

    // exp(i nu L/2) exp(kappa M/2) exp(i mu L/2) with transmittance cos^2(kappa/2).
    static BeamSplitterSpec with_reflectance(double reflectance);
    double transmittance() const;
    // 2x2 mode map acting on (a_j, a_k).
    CMatrix mode_matrix() const;
};

// Mixes the i-th mode of ch1 with the i-th mode of ch2 for every i.
GaussianState beam_split(const GaussianState& state, const BeamSplitterSpec& spec, int ch1, int ch2);

GaussianState displace(const GaussianState& state, const ModeRef& mode, cplx alpha);

// Monochromatic displacement at omega_d projected onto every registered mode
// of the channel: mode l receives conj(f~_l(omega_d)) alpha.
GaussianState displace_monochromatic(const GaussianState& state, int channel, cplx alpha, double omega_d);

// Pure-loss channel with transmission eta.
GaussianState loss(const GaussianState& state, const ModeRef& mode, double eta);

// Squeezing spectrum r~(w) sampled on the spectral twin of a time grid.
class SqueezingSpectrum {
  public:
    SqueezingSpectrum(modes::TimeGrid grid, std::vector<double> values);

    static SqueezingSpectrum flat(const modes::TimeGrid& grid, double r);
    // r~(w) = r exp(-w^2 / (2 sigma^2)) with sigma set from the half width.
    static SqueezingSpectrum gaussian(const modes::TimeGrid& grid, double r, double hwhm);

    const modes::TimeGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }

    // Circular time-domain kernel r(tau_j), tau_j = j dt, j = 0..n-1.
    std::vector<double> kernel() const;

  private:
    modes::TimeGrid grid_;
    std::vector<double> values_;
};

// (f* (*) r)(t): the pair-creation partner of f under the squeezing kernel.
modes::ModeFunction pair_partner(const modes::ModeFunction& f, const SqueezingSpectrum& r);

// |<f, N(f* (*) r)>|^2
double purity_real(const modes::ModeFunction& f, const SqueezingSpectrum& r);
// |<f*, N(f* (*) r)>|^2
double purity_complex(const modes::ModeFunction& f, const SqueezingSpectrum& r);

// CW single-channel squeezing projected onto the channel's registered
// waveforms; same sign convention as squeeze_mode.
GaussianState squeeze_channel(const GaussianState& state, int channel, const SqueezingSpectrum& r);
// CW two-mode squeezing between the registered waveforms of two channels.
GaussianState epr_channels(const GaussianState& state, int ch1, int ch2, const SqueezingSpectrum& r);

// Largest |cov| / |mean| entry coupling the listed modes to all other modes.
double cross_coupling(const GaussianState& state, const std::vector<std::size_t>& block);

}  // namespace qawg::gaussian
