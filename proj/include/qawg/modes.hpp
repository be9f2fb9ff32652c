#pragma once

// Temporal/spectral mode functions on a uniform time grid.
//
// Fourier convention:  f~(w) = (1/sqrt(2 pi)) \int f(t) exp(-i w t) dt,
// evaluated on the grid's spectral twin w_k = (k - n/2) dw, dw = 2 pi / (n dt).
// The carrier sits at w = 0 (rotating frame).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qawg/types.hpp"

namespace qawg::modes {

class TimeGrid {
  public:
    TimeGrid(double t0, double dt, std::size_t n_samples);

    // 0.25 ns sampling over 256 ns starting at -64 ns.
    static TimeGrid standard();

    double t0() const { return t0_; }
    double dt() const { return dt_; }
    std::size_t size() const { return n_; }
    double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }
    double t_end() const { return time(n_); }

    double domega() const;
    double omega(std::size_t k) const;

    // Index of the sample at t = 0. Throws PreconditionError if t = 0 is not a
    // grid point.
    std::size_t zero_index() const;

    // Converts a duration to a whole number of samples; throws if it is not
    // commensurate with dt (relative tolerance 1e-6).
    std::size_t samples_in(double duration) const;

    bool same_as(const TimeGrid& other) const;

  private:
    double t0_;
    double dt_;
    std::size_t n_;
};

struct WaveformParams {
    double gamma;    // decay rate, rad/s
    double delta_t;  // bin duration, s

    void validate() const;
};

class ModeFunction {
  public:
    ModeFunction(TimeGrid grid, std::vector<cplx> values, std::string label = {});

    const TimeGrid& grid() const { return grid_; }
    std::span<const cplx> values() const { return values_; }
    const cplx& operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    const std::string& label() const { return label_; }

    double norm() const;
    bool is_real(double tol = 0.0) const;

    ModeFunction normalized() const;
    ModeFunction conjugated() const;
    ModeFunction scaled(cplx factor) const;
    ModeFunction with_label(std::string label) const;

    // Discrete f~(w_k) on the spectral twin, k = 0..n-1.
    std::vector<cplx> spectrum() const;
    // Direct evaluation of the discrete transform at an arbitrary frequency.
    cplx spectrum_at(double omega) const;

    // Averages onto a coarser grid whose samples are unions of whole fine
    // samples (box integration), then renormalizes. Used to express a waveform
    // in the sample basis of a bandwidth-limited detector.
    ModeFunction rebinned(const TimeGrid& coarse) const;

  private:
    TimeGrid grid_;
    std::vector<cplx> values_;
    std::string label_;
};

// Inverse of ModeFunction::spectrum.
std::vector<cplx> from_spectrum(const TimeGrid& grid, std::span<const cplx> spectrum);

ModeFunction make_time_bin(const WaveformParams& params, const TimeGrid& grid);
ModeFunction make_balanced_time_bin(const WaveformParams& params, const TimeGrid& grid);

cplx inner_product(const ModeFunction& a, const ModeFunction& b);
double mode_match(const ModeFunction& a, const ModeFunction& b);

// Orthonormal system of k modes whose first element is N(f).
std::vector<ModeFunction> complete_basis(const ModeFunction& f, std::size_t k);

// Integer shift on the grid; samples moved past either end are dropped.
ModeFunction shifted(const ModeFunction& f, std::ptrdiff_t samples);

}  // namespace qawg::modes
