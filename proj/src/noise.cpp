#include "emergence/noise.hpp"

#include "emergence/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>

namespace emergence {

namespace {

using Engine = std::mt19937_64;

void fill_intrinsic(const NoiseSpec& spec, Engine& engine, std::vector<double>& z) {
    switch (spec.kind) {
    case NoiseKind::Zero:
        std::fill(z.begin(), z.end(), 0.0);
        return;
    case NoiseKind::Gaussian: {
        std::normal_distribution<double> normal(0.0, spec.sigma);
        for (double& v : z) v = normal(engine);
        return;
    }
    case NoiseKind::UniformCube: {
        std::uniform_real_distribution<double> uniform(-0.5 * spec.radius, 0.5 * spec.radius);
        for (double& v : z) v = uniform(engine);
        return;
    }
    case NoiseKind::UniformBall: {
        std::normal_distribution<double> normal(0.0, 1.0);
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (double& v : z) {
                v = normal(engine);
                norm2 += v * v;
            }
        } while (norm2 == 0.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const double radius =
            spec.radius * std::pow(uniform(engine), 1.0 / static_cast<double>(z.size()));
        const double scale = radius / std::sqrt(norm2);
        for (double& v : z) v *= scale;
        return;
    }
    }
}

double euclidean_norm(const std::vector<double>& z) {
    return std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

struct CdfCache {
    std::mutex mutex;
    std::filesystem::path dir;
    std::map<std::string, CdfTable> tables;
};

CdfCache& cdf_cache() {
    static CdfCache cache;
    return cache;
}

const CdfTable& cube_table(const NoiseSpec& spec, Index m) {
    auto& cache = cdf_cache();
    const std::string key = cdf_table_key(spec, m);
    std::lock_guard lock(cache.mutex);
    if (auto it = cache.tables.find(key); it != cache.tables.end()) return it->second;

    std::optional<std::filesystem::path> file;
    if (!cache.dir.empty()) {
        file = cache.dir / ("cdf_" + key + ".csv");
        if (std::ifstream in(*file); in) {
            return cache.tables.emplace(key, CdfTable::read_csv(in)).first->second;
        }
    }
    CdfTable table = build_cube_cdf_table(spec, m);
    if (file) {
        std::filesystem::create_directories(cache.dir);
        std::ofstream out(*file);
        if (!out) throw Error(ErrorKind::Io, "cannot write CDF table " + file->string());
        table.write_csv(out);
    }
    return cache.tables.emplace(key, std::move(table)).first->second;
}

// One-sided lower Wilson limit.
double wilson_lower(std::uint64_t successes, std::uint64_t n, double z) {
    if (n == 0) return 0.0;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double centre = p + z2 / (2.0 * nn);
    const double spread = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    return std::max(0.0, (centre - spread) / (1.0 + z2 / nn));
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SeedStream SeedStream::derive(std::uint64_t tag) const {
    return SeedStream(mix64(seed_ ^ mix64(tag + 0x632be59bd9b4e019ULL)));
}

std::uint64_t SeedStream::engine_seed(std::uint64_t index) const {
    return mix64(seed_ + 0x9e3779b97f4a7c15ULL * (index + 1));
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
    case NoiseKind::Zero: return "zero";
    case NoiseKind::UniformBall: return "uniform_ball";
    case NoiseKind::UniformCube: return "uniform_cube";
    case NoiseKind::Gaussian: return "gaussian";
    }
    return "?";
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "zero") return NoiseKind::Zero;
    if (s == "uniform_ball" || s == "ball") return NoiseKind::UniformBall;
    if (s == "uniform_cube" || s == "cube") return NoiseKind::UniformCube;
    if (s == "gaussian") return NoiseKind::Gaussian;
    config_error("unknown noise kind '" + s + "'");
}

void NoiseSpec::validate() const {
    switch (kind) {
    case NoiseKind::Zero:
        break;
    case NoiseKind::UniformBall:
        // r = 0 is accepted as the point mass at 0
        if (!(radius >= 0.0) || !std::isfinite(radius)) domain_error("uniform ball: radius must be >= 0");
        break;
    case NoiseKind::UniformCube:
        if (!(radius > 0.0) || !std::isfinite(radius)) domain_error("uniform cube: edge must be positive");
        break;
    case NoiseKind::Gaussian:
        if (!(sigma > 0.0) || !std::isfinite(sigma)) domain_error("gaussian: sigma must be positive");
        break;
    }
    if (clip_factor && (!(*clip_factor >= 0.0) || !std::isfinite(*clip_factor))) {
        domain_error("clipped noise: factor must be finite and >= 0");
    }
}

bool NoiseSpec::is_zero() const {
    return kind == NoiseKind::Zero || (kind == NoiseKind::UniformBall && radius == 0.0);
}

std::string NoiseSpec::canonical() const {
    std::ostringstream os;
    os << to_string(kind);
    if (kind == NoiseKind::UniformBall || kind == NoiseKind::UniformCube) os << ":r=" << format_double(radius);
    if (kind == NoiseKind::Gaussian) os << ":sigma=" << format_double(sigma);
    return os.str();
}

NoiseDraw sample(const NoiseSpec& spec, const SeedStream& stream, std::uint64_t t, Index k, Index d,
                 InnerProduct inner, double state_norm) {
    spec.validate();
    if (k < 2 || d < 1) domain_error("sample: need k >= 2 and d >= 1");
    NoiseDraw draw;
    if (spec.is_zero()) {
        draw.value = QuotientVector::zero(k, d);
        return draw;
    }
    std::vector<double> z(static_cast<std::size_t>(intrinsic_dim(k, d)));
    Engine engine(stream.engine_seed(t));
    fill_intrinsic(spec, engine, z);
    draw.raw_norm = euclidean_norm(z);
    draw.norm = draw.raw_norm;
    if (spec.clip_factor) {
        const double cap = *spec.clip_factor * state_norm;
        if (draw.raw_norm > cap) {
            const double scale = draw.raw_norm > 0.0 ? cap / draw.raw_norm : 0.0;
            for (double& v : z) v *= scale;
            draw.norm = cap;
            draw.clipped = true;
        }
    }
    draw.value = embed_intrinsic(z, k, d, inner);
    return draw;
}

double CdfTable::operator()(double at) const {
    if (x.empty()) return 0.0;
    if (at < 0.0) return 0.0;
    if (at >= x.back()) return f.back();
    if (at <= x.front()) return f.front();
    const auto hi = std::upper_bound(x.begin(), x.end(), at);
    const auto i = static_cast<std::size_t>(hi - x.begin());
    const double w = (at - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - w) * f[i - 1] + w * f[i];
}

void CdfTable::write_csv(std::ostream& out) const {
    out << "x,F_estimate,half_width\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << format_double(x[i]) << ',' << format_double(f[i]) << ',' << format_double(half_width) << '\n';
    }
}

CdfTable CdfTable::read_csv(std::istream& in) {
    CdfTable table;
    std::string line;
    if (!std::getline(in, line) || line != "x,F_estimate,half_width") {
        throw Error(ErrorKind::Io, "CDF table: unexpected header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
            throw Error(ErrorKind::Io, "CDF table: malformed row '" + line + "'");
        }
        table.x.push_back(std::stod(a));
        table.f.push_back(std::stod(b));
        table.half_width = std::stod(c);
    }
    if (table.x.empty()) throw Error(ErrorKind::Io, "CDF table: no rows");
    return table;
}

CdfTable build_cube_cdf_table(const NoiseSpec& spec, Index m, const CdfTableOptions& options) {
    if (spec.kind != NoiseKind::UniformCube) domain_error("cube CDF table: spec is not a cube");
    spec.unclipped().validate();
    if (m < 1) domain_error("cube CDF table: dimension must be positive");
    if (options.samples == 0 || options.grid_points < 2) domain_error("cube CDF table: empty sampling plan");

    std::vector<double> norms(options.samples);
    std::vector<double> z(static_cast<std::size_t>(m));
    Engine engine(mix64(options.seed));
    for (double& n : norms) {
        fill_intrinsic(spec, engine, z);
        n = euclidean_norm(z);
    }
    std::sort(norms.begin(), norms.end());

    CdfTable table;
    table.samples = options.samples;
    const double top = 0.5 * spec.radius * std::sqrt(static_cast<double>(m));
    for (std::size_t i = 0; i < options.grid_points; ++i) {
        const double at = top * static_cast<double>(i) / static_cast<double>(options.grid_points - 1);
        const auto count = std::upper_bound(norms.begin(), norms.end(), at) - norms.begin();
        table.x.push_back(at);
        table.f.push_back(static_cast<double>(count) / static_cast<double>(options.samples));
    }
    table.f.back() = 1.0;
    table.half_width = std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(options.samples)));
    return table;
}

void set_cdf_cache_dir(std::filesystem::path dir) {
    auto& cache = cdf_cache();
    std::lock_guard lock(cache.mutex);
    cache.dir = std::move(dir);
}

std::string cdf_table_key(const NoiseSpec& spec, Index m) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(spec.canonical() + ":m=" + std::to_string(m));
    return os.str();
}

double norm_cdf(const NoiseSpec& spec, Index m, double x) {
    const NoiseSpec base = spec.unclipped();
    base.validate();
    if (m < 1) domain_error("norm_cdf: dimension must be positive");
    if (std::isnan(x)) domain_error("norm_cdf: x is NaN");
    if (x < 0.0) return 0.0;
    if (base.is_zero()) return 1.0;
    if (std::isinf(x)) return 1.0;
    switch (base.kind) {
    case NoiseKind::UniformBall:
        return std::min(1.0, std::pow(x / base.radius, static_cast<double>(m)));
    case NoiseKind::Gaussian: {
        const double u = 0.5 * (x / base.sigma) * (x / base.sigma);
        return boost::math::gamma_p(0.5 * static_cast<double>(m), u);
    }
    case NoiseKind::UniformCube:
        return cube_table(base, m)(x);
    case NoiseKind::Zero:
        break;
    }
    return 1.0;
}

void PathNoiseSpec::validate() const {
    base.validate();
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) domain_error("path noise: amplitude must be >= 0");
    if (is_ou()) {
        if (!std::isfinite(ou_rate)) domain_error("path noise: OU rate must be finite");
        if (!base.is_zero() && base.kind != NoiseKind::Gaussian) {
            domain_error("path noise: the OU process needs a Gaussian base law");
        }
    } else if (!(refresh > 0.0) || !std::isfinite(refresh)) {
        domain_error("path noise: refresh interval must be positive");
    }
}

std::uint64_t frozen_cells(double refresh, double T) {
    if (!(T > 0.0)) return 1;
    const double cells = std::ceil(T / refresh - 1e-9);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(cells));
}

double path_bound(const PathNoiseSpec& spec, Index m, double x, double T, const PathBoundOptions& options) {
    spec.validate();
    if (!(T >= 0.0)) domain_error("path_bound: T must be >= 0");
    if (x < 0.0) return 0.0;
    if (spec.is_zero()) return 1.0;
    const double scaled_x = x / spec.amplitude;
    if (!spec.is_ou()) {
        const double f = norm_cdf(spec.base, m, scaled_x);
        return std::pow(f, static_cast<double>(frozen_cells(spec.refresh, T)));
    }

    const double theta = spec.ou_rate;
    const double step = options.grid_step > 0.0 ? options.grid_step : std::min(0.01, 0.1 / theta);
    const auto steps = static_cast<std::uint64_t>(std::ceil(T / step - 1e-9));
    const double decay = std::exp(-theta * step);
    const double kick = spec.base.sigma * std::sqrt(1.0 - decay * decay);
    const SeedStream root(options.seed);
    std::vector<double> z(static_cast<std::size_t>(m));
    std::uint64_t inside = 0;
    for (std::uint64_t p = 0; p < options.paths; ++p) {
        Engine engine(root.engine_seed(p));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& v : z) v = spec.base.sigma * normal(engine);
        bool ok = euclidean_norm(z) <= scaled_x;
        for (std::uint64_t s = 0; ok && s < steps; ++s) {
            for (double& v : z) v = decay * v + kick * normal(engine);
            ok = euclidean_norm(z) <= scaled_x;
        }
        if (ok) ++inside;
    }
    return wilson_lower(inside, options.paths, 2.3263478740408408);
}

PathNoise::PathNoise(PathNoiseSpec spec, SeedStream stream, Index k, Index d, InnerProduct inner, double dt)
    : spec_(std::move(spec)), stream_(stream), k_(k), d_(d), inner_(inner), dt_(dt) {
    spec_.validate();
    if (!(dt_ > 0.0)) domain_error("PathNoise: dt must be positive");
    if (k_ < 2 || d_ < 1) domain_error("PathNoise: need k >= 2 and d >= 1");
}

NoiseDraw PathNoise::at_step(std::uint64_t n, double state_norm) {
    NoiseDraw draw;
    if (spec_.is_zero()) {
        draw.value = QuotientVector::zero(k_, d_);
        return draw;
    }
    std::vector<double> z;
    if (!spec_.is_ou()) {
        const double right = static_cast<double>(n + 1) * dt_;
        const auto cell = frozen_cells(spec_.refresh, right) - 1;
        z.resize(static_cast<std::size_t>(intrinsic_dim(k_, d_)));
        Engine engine(stream_.engine_seed(cell));
        fill_intrinsic(spec_.base.unclipped(), engine, z);
    } else {
        if (n + 1 < next_ou_step_) domain_error("PathNoise: OU steps must be visited in order");
        const double decay = std::exp(-spec_.ou_rate * dt_);
        const double kick = spec_.base.sigma * std::sqrt(1.0 - decay * decay);
        if (ou_state_.empty()) {
            ou_state_.resize(static_cast<std::size_t>(intrinsic_dim(k_, d_)));
            Engine engine(stream_.engine_seed(0));
            std::normal_distribution<double> normal(0.0, spec_.base.sigma);
            for (double& v : ou_state_) v = normal(engine);
            next_ou_step_ = 1;
        }
        while (next_ou_step_ <= n) {
            Engine engine(stream_.engine_seed(next_ou_step_));
            std::normal_distribution<double> normal(0.0, 1.0);
            for (double& v : ou_state_) v = decay * v + kick * normal(engine);
            ++next_ou_step_;
        }
        z = ou_state_;
    }
    for (double& v : z) v *= spec_.amplitude;
    draw.raw_norm = euclidean_norm(z);
    draw.norm = draw.raw_norm;
    if (spec_.base.clip_factor) {
        const double cap = *spec_.base.clip_factor * state_norm;
        if (draw.raw_norm > cap) {
            const double scale = draw.raw_norm > 0.0 ? cap / draw.raw_norm : 0.0;
            for (double& v : z) v *= scale;
            draw.norm = cap;
            draw.clipped = true;
        }
    }
    draw.value = embed_intrinsic(z, k_, d_, inner_);
    return draw;
}

}  // namespace emergence
