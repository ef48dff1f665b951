#pragma once

#include "emergence/quotient.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace emergence {

/// Deterministic source of independent random streams.
///
/// Draw `t` of a stream is a pure function of (seed, t); distinct derived
/// streams are independent for all practical purposes.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t seed = 0) : seed_(seed) {}

    SeedStream derive(std::uint64_t tag) const;
    /// Seed for the engine used by draw `index` of this stream.
    std::uint64_t engine_seed(std::uint64_t index) const;
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

std::uint64_t mix64(std::uint64_t z);

enum class NoiseKind {
    Zero,
    UniformBall,  // uniform in the ball of radius `radius`
    UniformCube,  // uniform in the cube of edge `radius`, centred at 0
    Gaussian,     // N(0, sigma^2 I)
};

/// Law of one noise vector H living in the quotient.
///
/// Samples are drawn in intrinsic coordinates of the (k-1)d dimensional
/// quotient and mapped there isometrically, so ||H|| has exactly the law
/// described by `norm_cdf` for m = (k-1)d.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Zero;
    double radius = 0.0;
    double sigma = 0.0;
    /// When set, samples with ||H|| > clip_factor * ||state|| are rescaled
    /// onto that sphere.
    std::optional<double> clip_factor;

    static NoiseSpec zero() { return {}; }
    static NoiseSpec ball(double r) { return {NoiseKind::UniformBall, r, 0.0, {}}; }
    static NoiseSpec cube(double edge) { return {NoiseKind::UniformCube, edge, 0.0, {}}; }
    static NoiseSpec gaussian(double sigma) { return {NoiseKind::Gaussian, 0.0, sigma, {}}; }

    NoiseSpec clipped(double factor) const {
        NoiseSpec s = *this;
        s.clip_factor = factor;
        return s;
    }
    NoiseSpec unclipped() const {
        NoiseSpec s = *this;
        s.clip_factor.reset();
        return s;
    }

    void validate() const;
    bool is_zero() const;
    /// Stable textual form of the base law, used to key CDF tables.
    std::string canonical() const;
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

struct NoiseDraw {
    QuotientVector value;
    double raw_norm = 0.0;  // before clipping
    double norm = 0.0;
    bool clipped = false;
};

/// Draw `t` from `stream` of the law `spec` on a k x d quotient.
/// `state_norm` feeds the clipping cap and is ignored when no clip is set.
NoiseDraw sample(const NoiseSpec& spec, const SeedStream& stream, std::uint64_t t, Index k, Index d,
                 InnerProduct inner = InnerProduct::Pairwise,
                 double state_norm = std::numeric_limits<double>::infinity());

/// Tabulated Monte Carlo estimate of a norm CDF.
struct CdfTable {
    std::vector<double> x;
    std::vector<double> f;
    /// Uniform (DKW, 99%) confidence half-width of every estimate.
    double half_width = 0.0;
    std::uint64_t samples = 0;

    double operator()(double at) const;
    void write_csv(std::ostream& out) const;
    static CdfTable read_csv(std::istream& in);
};

struct CdfTableOptions {
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 0x5eedc0be;
    std::size_t grid_points = 2001;
};

/// Builds the cube table for dimension m (no caching).
CdfTable build_cube_cdf_table(const NoiseSpec& spec, Index m, const CdfTableOptions& options = {});

/// Directory in which cube CDF tables are persisted as `cdf_<hash>.csv`.
/// Empty (the default) keeps tables in memory only.
void set_cdf_cache_dir(std::filesystem::path dir);
std::string cdf_table_key(const NoiseSpec& spec, Index m);

/// F(x) = P(||H|| <= x) for dimension m. Clipping is ignored.
double norm_cdf(const NoiseSpec& spec, Index m, double x);

/// Continuous-time noise process H(t).
///
/// Default is piecewise-frozen: iid draws of `base`, constant on the cells
/// (j*refresh, (j+1)*refresh] (t = 0 belongs to cell 0). With `ou_rate > 0`
/// the process is a stationary Ornstein-Uhlenbeck process whose marginal is
/// the Gaussian `base`. The equation sees amplitude * H(t).
struct PathNoiseSpec {
    NoiseSpec base;
    double refresh = 0.01;
    double ou_rate = 0.0;
    double amplitude = 1.0;

    bool is_ou() const { return ou_rate > 0.0; }
    bool is_zero() const { return base.is_zero() || amplitude == 0.0; }
    void validate() const;
};

/// Number of frozen cells met by [0, T]: max(1, ceil(T / refresh)).
std::uint64_t frozen_cells(double refresh, double T);

struct PathBoundOptions {
    std::uint64_t paths = 10'000;
    std::uint64_t seed = 0xb0a7d;
    double grid_step = 0.0;  // 0 picks min(0.01, 0.1 / ou_rate)
};

/// Lower bound F(x, T) <= P(max_{0<=t<=T} ||amplitude * H(t)|| <= x).
/// Exact for the piecewise-frozen process; a 99% lower confidence limit of
/// a Monte Carlo estimate for the OU process.
double path_bound(const PathNoiseSpec& spec, Index m, double x, double T, const PathBoundOptions& options = {});

/// One realised path of a PathNoiseSpec, evaluated on an integration grid.
class PathNoise {
public:
    PathNoise(PathNoiseSpec spec, SeedStream stream, Index k, Index d, InnerProduct inner, double dt);

    /// Value (amplitude included, clip applied against `state_norm`) used by
    /// the integration step covering (n dt, (n+1) dt]. Steps must be visited
    /// in increasing order for the OU process.
    NoiseDraw at_step(std::uint64_t n, double state_norm = std::numeric_limits<double>::infinity());

private:
    PathNoiseSpec spec_;
    SeedStream stream_;
    Index k_;
    Index d_;
    InnerProduct inner_;
    double dt_;
    std::uint64_t next_ou_step_ = 0;
    std::vector<double> ou_state_;
};

}  // namespace emergence
