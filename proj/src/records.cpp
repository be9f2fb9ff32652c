#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "json.hpp"
#include "qawg/analysis.hpp"

namespace qawg::analysis {
namespace {

using Index = Eigen::Index;

static_assert(std::endian::native == std::endian::little, "record files are written in host order");

constexpr char kMagic[8] = {'Q', 'A', 'W', 'G', 'R', 'E', 'C', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kSamplerPoints = 4096;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Independent stream per (seed, kind, phase, event).
std::mt19937_64 event_rng(std::uint64_t seed, RecordKind kind, std::size_t phase, std::size_t event) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ (static_cast<std::uint64_t>(kind) + 1));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(phase) << 32));
    h = splitmix64(h ^ static_cast<std::uint64_t>(event));
    return std::mt19937_64(h);
}

// Inverse CDF of P_theta on a 4096-point grid. Node values of the CDF come
// from 5-point Gauss-Legendre integration of the exact density; in between,
// a monotone (Fritsch-Carlson) cubic Hermite with the density as slope.
class QuadratureSampler {
  public:
    QuadratureSampler(const CMatrix& rho, double theta) {
        const double cutoff = double(rho.rows() - 1);
        const double reach = std::sqrt(2.0 * cutoff + 1.0) + 6.0;
        x_.resize(kSamplerPoints);
        for (std::size_t i = 0; i < kSamplerPoints; ++i)
            x_[i] = -reach + 2.0 * reach * double(i) / double(kSamplerPoints - 1);
        h_ = x_[1] - x_[0];
        pdf_ = marginal(rho, theta, x_);
        for (auto& p : pdf_) p = std::max(p, 0.0);

        static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                     0.9061798459386640};
        static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                     0.2369268850561891};
        std::vector<double> inner;
        inner.reserve(5 * (kSamplerPoints - 1));
        for (std::size_t i = 0; i + 1 < kSamplerPoints; ++i)
            for (double g : gx) inner.push_back(x_[i] + 0.5 * h_ * (1.0 + g));
        const auto pin = marginal(rho, theta, inner);
        cdf_.assign(kSamplerPoints, 0.0);
        for (std::size_t i = 0; i + 1 < kSamplerPoints; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < 5; ++k) s += gw[k] * std::max(pin[5 * i + k], 0.0);
            cdf_[i + 1] = cdf_[i] + 0.5 * h_ * s;
        }
        const double total = cdf_.back();
        if (!(total > 0.0)) throw PhysicsError("quadrature marginal has no mass on the sampling grid");
        for (auto& c : cdf_) c /= total;
        slope_.resize(kSamplerPoints);
        for (std::size_t i = 0; i < kSamplerPoints; ++i) slope_[i] = pdf_[i] / total;
        for (std::size_t i = 0; i + 1 < kSamplerPoints; ++i) {
            const double delta = (cdf_[i + 1] - cdf_[i]) / h_;
            if (delta <= 0.0) {
                slope_[i] = slope_[i + 1] = 0.0;
                continue;
            }
            const double a = slope_[i] / delta, b = slope_[i + 1] / delta;
            if (a * a + b * b > 9.0) {
                const double tau = 3.0 / std::sqrt(a * a + b * b);
                slope_[i] = tau * a * delta;
                slope_[i + 1] = tau * b * delta;
            }
        }
    }

    double operator()(double u) const {
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cdf_.begin() - 1, 0));
        i = std::min(i, kSamplerPoints - 2);
        double lo = 0.0, hi = 1.0;
        for (int k = 0; k < 60; ++k) {
            const double t = 0.5 * (lo + hi);
            (hermite(i, t) < u ? lo : hi) = t;
        }
        return x_[i] + 0.5 * (lo + hi) * h_;
    }

  private:
    double hermite(std::size_t i, double t) const {
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * cdf_[i] + (t3 - 2 * t2 + t) * h_ * slope_[i] + (-2 * t3 + 3 * t2) * cdf_[i + 1] +
               (t3 - t2) * h_ * slope_[i + 1];
    }

    std::vector<double> x_, pdf_, cdf_, slope_;
    double h_ = 0.0;
};

double squeezed_variance(double r, double eta, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return 0.5 * eta * (std::exp(-2.0 * r) * c * c + std::exp(2.0 * r) * s * s) + 0.5 * (1.0 - eta);
}

void low_pass(RMatrix& traces, double bandwidth_hz, double dt) {
    if (bandwidth_hz <= 0.0) return;
    const double a = 1.0 - std::exp(-2.0 * kPi * bandwidth_hz * dt);
    for (Index e = 0; e < traces.rows(); ++e) {
        double y = traces(e, 0);
        for (Index j = 1; j < traces.cols(); ++j) {
            y += a * (traces(e, j) - y);
            traces(e, j) = y;
        }
    }
}

RMatrix real_basis(const modes::ModeFunction& f, std::size_t k) {
    const auto basis = modes::complete_basis(f, k);
    const double w = std::sqrt(f.grid().dt());
    RMatrix e(Index(f.size()), Index(basis.size()));
    for (std::size_t l = 0; l < basis.size(); ++l)
        for (std::size_t j = 0; j < f.size(); ++j) e(Index(j), Index(l)) = basis[l][j].real() * w;
    return e;
}

void require_real_unit(const modes::ModeFunction& f) {
    double peak = 0.0, imag = 0.0;
    for (const auto& v : f.values()) {
        peak = std::max(peak, std::abs(v));
        imag = std::max(imag, std::abs(v.imag()));
    }
    if (imag > 1e-9 * peak) throw PreconditionError("homodyne records need a real mode function");
    if (std::abs(f.norm() - 1.0) > 1e-8) throw PreconditionError("record mode function must be normalized");
}

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
    template <class T>
    T get(const char* what) {
        if (pos_ + sizeof(T) > b_.size()) throw DataError(std::string("record file truncated while reading ") + what, pos_);
        T v;
        std::memcpy(&v, b_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return b_.size() - pos_; }
    const std::uint8_t* here() const { return b_.data() + pos_; }
    void skip(std::size_t n) { pos_ += n; }

  private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(RecordKind kind) {
    switch (kind) {
        case RecordKind::heralded: return "heralded";
        case RecordKind::vacuum_reference: return "vacuum_reference";
        case RecordKind::pulse_probe: return "pulse_probe";
    }
    return "unknown";
}

RecordKind record_kind_from_string(const std::string& name) {
    if (name == "heralded") return RecordKind::heralded;
    if (name == "vacuum_reference") return RecordKind::vacuum_reference;
    if (name == "pulse_probe") return RecordKind::pulse_probe;
    throw PreconditionError("unknown record kind: " + name);
}

HomodyneRecord RecordBlock::event(std::size_t e) const {
    if (e >= events()) throw PreconditionError("event index out of range");
    HomodyneRecord r{theta_lo, kind, std::vector<double>(static_cast<std::size_t>(traces.cols()))};
    for (Index j = 0; j < traces.cols(); ++j) r.trace[std::size_t(j)] = traces(Index(e), j);
    return r;
}

std::vector<double> six_phases() {
    std::vector<double> p(6);
    for (std::size_t k = 0; k < 6; ++k) p[k] = double(k) * kPi / 6.0;
    return p;
}

std::vector<RecordBlock> simulate_records(const herald::HeraldedState& hs, const modes::ModeFunction& f,
                                          const RecordOptions& opt, Execution exec) {
    require_real_unit(f);
    if (opt.basis_size < 8) throw PreconditionError("record simulation needs a basis of at least 8 modes");
    if (opt.basis_size > f.size()) throw PreconditionError("basis size exceeds the number of record samples");
    if (opt.n_events == 0 || opt.phases.empty()) throw PreconditionError("record simulation needs events and phases");
    if (!(opt.background_eta >= 0.0 && opt.background_eta <= 1.0))
        throw PreconditionError("background transmission must lie in [0, 1]");
    if (herald::trace_defect(hs.rho) > 1e-6) throw PreconditionError("heralded state is not normalized");

    const RMatrix e = real_basis(f, opt.basis_size);
    const Index d = e.rows(), k = e.cols();
    std::vector<RecordBlock> out;
    out.reserve(opt.phases.size());
    for (std::size_t ph = 0; ph < opt.phases.size(); ++ph) {
        const double theta = opt.phases[ph];
        const QuadratureSampler sampler(hs.rho, theta);
        const double sd_perp = std::sqrt(opt.vacuum_orthogonal ? 0.5 : squeezed_variance(opt.background_r, opt.background_eta, theta));
        RecordBlock block{f.grid(), theta, RecordKind::heralded, opt.seed, RMatrix(Index(opt.n_events), d)};
        const long n = static_cast<long>(opt.n_events);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
        for (long ev = 0; ev < n; ++ev) {
            auto rng = event_rng(opt.seed, RecordKind::heralded, ph, std::size_t(ev));
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            std::normal_distribution<double> gauss(0.0, 1.0);
            RVector q(k);
            q(0) = sampler(uni(rng));
            for (Index l = 1; l < k; ++l) q(l) = sd_perp * gauss(rng);
            RVector w(d);
            for (Index j = 0; j < d; ++j) w(j) = std::sqrt(0.5) * gauss(rng);
            w -= e * (e.transpose() * w);
            block.traces.row(ev) = (e * q + w).transpose();
        }
        low_pass(block.traces, opt.detector_bandwidth_hz, f.grid().dt());
        out.push_back(std::move(block));
    }
    return out;
}

std::vector<RecordBlock> simulate_vacuum_reference(const modes::TimeGrid& grid, std::size_t n_events,
                                                   std::span<const double> phases, std::uint64_t seed, Execution exec) {
    if (n_events == 0 || phases.empty()) throw PreconditionError("vacuum reference needs events and phases");
    std::vector<RecordBlock> out;
    for (std::size_t ph = 0; ph < phases.size(); ++ph) {
        RecordBlock block{grid, phases[ph], RecordKind::vacuum_reference, seed, RMatrix(Index(n_events), Index(grid.size()))};
        const long n = static_cast<long>(n_events);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
        for (long ev = 0; ev < n; ++ev) {
            auto rng = event_rng(seed, RecordKind::vacuum_reference, ph, std::size_t(ev));
            std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
            for (Index j = 0; j < block.traces.cols(); ++j) block.traces(ev, j) = gauss(rng);
        }
        out.push_back(std::move(block));
    }
    return out;
}

RecordBlock simulate_pulse_probe(const modes::ModeFunction& f, double beta, std::size_t n_events, std::uint64_t seed) {
    require_real_unit(f);
    if (n_events == 0) throw PreconditionError("pulse probe needs events");
    const double w = std::sqrt(f.grid().dt());
    RecordBlock block{f.grid(), 0.0, RecordKind::pulse_probe, seed, RMatrix(Index(n_events), Index(f.size()))};
    for (std::size_t ev = 0; ev < n_events; ++ev) {
        auto rng = event_rng(seed, RecordKind::pulse_probe, 0, ev);
        std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
        std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
        const double amp = std::sqrt(2.0) * beta * std::cos(uni(rng));
        for (std::size_t j = 0; j < f.size(); ++j) block.traces(Index(ev), Index(j)) = amp * w * f[j].real() + gauss(rng);
    }
    return block;
}

std::vector<QuadratureSample> project_records(std::span<const RecordBlock> blocks, const modes::ModeFunction& f) {
    require_real_unit(f);
    RVector e(Index(f.size()));
    for (std::size_t j = 0; j < f.size(); ++j) e(Index(j)) = f[j].real() * std::sqrt(f.grid().dt());
    std::vector<QuadratureSample> out;
    for (const auto& b : blocks) {
        if (!b.grid.same_as(f.grid())) throw PreconditionError("records and mode function use different grids");
        const RVector x = b.traces * e;
        for (Index i = 0; i < x.size(); ++i) out.push_back({b.theta_lo, x(i)});
    }
    return out;
}

std::vector<std::uint8_t> encode_records(std::span<const RecordBlock> blocks) {
    std::vector<std::uint8_t> out(kMagic, kMagic + 8);
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
    for (const auto& b : blocks) {
        put<double>(out, b.grid.t0());
        put<double>(out, b.grid.dt());
        put<std::uint64_t>(out, b.grid.size());
        put<double>(out, b.theta_lo);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(b.kind));
        put<std::uint32_t>(out, 0);
        put<std::uint64_t>(out, b.seed);
        put<std::uint64_t>(out, b.events());
        if (static_cast<std::size_t>(b.traces.cols()) != b.grid.size())
            throw PreconditionError("record block width does not match its grid");
        const auto* p = reinterpret_cast<const std::uint8_t*>(b.traces.data());
        out.insert(out.end(), p, p + sizeof(double) * static_cast<std::size_t>(b.traces.size()));
    }
    return out;
}

std::vector<RecordBlock> decode_records(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    char magic[8];
    for (auto& c : magic) c = static_cast<char>(in.get<std::uint8_t>("magic"));
    if (std::memcmp(magic, kMagic, 8) != 0) throw DataError("not a record file (bad magic)", 0);
    const auto version = in.get<std::uint32_t>("version");
    if (version != kFormatVersion) throw DataError("unsupported record format version " + std::to_string(version), 8);
    const auto count = in.get<std::uint32_t>("block count");
    std::vector<RecordBlock> out;
    for (std::uint32_t b = 0; b < count; ++b) {
        const std::size_t header = in.pos();
        const double t0 = in.get<double>("t0");
        const double dt = in.get<double>("dt");
        const auto n = in.get<std::uint64_t>("sample count");
        const double theta = in.get<double>("phase");
        const auto kind = in.get<std::uint32_t>("kind");
        in.get<std::uint32_t>("reserved");
        const auto seed = in.get<std::uint64_t>("seed");
        const auto events = in.get<std::uint64_t>("event count");
        if (!(std::isfinite(t0) && std::isfinite(dt) && dt > 0.0 && n >= 2 && std::isfinite(theta)))
            throw DataError("invalid block header", header);
        if (kind > static_cast<std::uint32_t>(RecordKind::pulse_probe)) throw DataError("invalid record kind", header + 32);
        if (events == 0 || n > in.remaining() / sizeof(double) || events > in.remaining() / sizeof(double) / n)
            throw DataError("block body extends past the end of the file", in.pos());
        RecordBlock block{modes::TimeGrid(t0, dt, std::size_t(n)), theta, static_cast<RecordKind>(kind), seed,
                          RMatrix(Index(events), Index(n))};
        const std::size_t body = in.pos();
        std::memcpy(block.traces.data(), in.here(), sizeof(double) * std::size_t(n * events));
        for (Index i = 0; i < block.traces.size(); ++i)
            if (!std::isfinite(block.traces.data()[i]))
                throw DataError("non-finite sample", body + sizeof(double) * std::size_t(i));
        in.skip(sizeof(double) * std::size_t(n * events));
        out.push_back(std::move(block));
    }
    if (in.remaining() != 0) throw DataError("trailing bytes after the last block", in.pos());
    return out;
}

void write_records(const std::string& path, std::span<const RecordBlock> blocks) {
    const auto bytes = encode_records(blocks);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw PreconditionError("cannot open " + path + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));

    nlohmann::json side;
    side["format"] = "QAWGREC1";
    side["byte_order"] = "little-endian";
    side["layout"] = "per block: header (t0, dt, n_samples, theta_lo, kind, reserved, seed, n_events), "
                     "then float64 samples column by column (sample-major)";
    side["convention"] = kConventionStamp;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& b : blocks)
        list.push_back({{"t0", b.grid.t0()},
                        {"dt", b.grid.dt()},
                        {"n_samples", b.grid.size()},
                        {"theta_lo", b.theta_lo},
                        {"kind", to_string(b.kind)},
                        {"seed", b.seed},
                        {"n_events", b.events()}});
    side["blocks"] = list;
    std::ofstream js(path + ".json");
    js << side.dump(2) << '\n';
}

std::vector<RecordBlock> read_records(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open record file " + path, 0);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_records(bytes);
}

}  // namespace qawg::analysis
