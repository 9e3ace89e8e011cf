#include "cardesign/genome.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "cardesign/error.hpp"
#include "cardesign/text.hpp"

namespace cardesign {

namespace {

constexpr std::string_view kDesignMagic = "cardesign-design";
constexpr int kDesignVersion = 1;

void check_interval(const Interval& iv, const char* name, bool allowNonPositive)
{
    if (!(iv.lo < iv.hi))
        throw ValidationError(std::string(name) + " bound requires min < max");
    if (!allowNonPositive && !(iv.lo > 0.0))
        throw ValidationError(std::string(name) + " bound requires min > 0");
}

double clamp_gene(double v, const Interval& iv, bool openTop)
{
    const double hi = openTop ? std::nextafter(iv.hi, iv.lo) : iv.hi;
    return std::clamp(v, iv.lo, hi);
}

} // namespace

void DesignConfig::validate() const
{
    if (nv < kMinVertices || nv > kMaxVertices)
        throw ValidationError("nv must lie in [3, 24], got " + std::to_string(nv));
    if (nw < kMinWheels || nw > kMaxWheels)
        throw ValidationError("nw must lie in [1, 12], got " + std::to_string(nw));
    check_interval(bounds.bodyMass, "bodyMass", false);
    check_interval(bounds.vertexRadius, "vertexRadius", false);
    check_interval(bounds.wheelRadius, "wheelRadius", false);
    check_interval(bounds.wheelMass, "wheelMass", false);
    check_interval(bounds.motorTargetSpeed, "motorTargetSpeed", true);
    check_interval(bounds.suspensionFrequency, "suspensionFrequency", false);
}

int genome_dimension(int nv, int nw)
{
    if (nv < kMinVertices || nv > kMaxVertices || nw < kMinWheels || nw > kMaxWheels)
        throw ValidationError("genome_dimension: nv in [3, 24] and nw in [1, 12] required");
    return 1 + nv + 5 * nw;
}

double vertex_angle(int i, int nv)
{
    if (nv < 1 || i < 1 || i > nv)
        throw ValidationError("vertex_angle: index out of range");
    return 360.0 * static_cast<double>(1 - i) / static_cast<double>(nv);
}

std::vector<Interval> gene_intervals(const DesignConfig& config)
{
    const auto& b = config.bounds;
    std::vector<Interval> out;
    out.reserve(static_cast<std::size_t>(genome_dimension(config.nv, config.nw)));
    out.push_back(b.bodyMass);
    for (int i = 0; i < config.nv; ++i)
        out.push_back(b.vertexRadius);
    for (int w = 0; w < config.nw; ++w) {
        out.push_back({1.0, static_cast<double>(config.nv + 1)});
        out.push_back(b.wheelRadius);
        out.push_back(b.wheelMass);
        out.push_back(b.motorTargetSpeed);
        out.push_back(b.suspensionFrequency);
    }
    return out;
}

std::vector<double> to_genes(const CarGenome& genome)
{
    std::vector<double> genes;
    genes.reserve(1 + genome.vertexRadii.size() + 5 * genome.wheels.size());
    genes.push_back(genome.bodyMass);
    genes.insert(genes.end(), genome.vertexRadii.begin(), genome.vertexRadii.end());
    for (const auto& w : genome.wheels) {
        genes.push_back(w.vertexGene);
        genes.push_back(w.radius);
        genes.push_back(w.mass);
        genes.push_back(w.motorTargetSpeed);
        genes.push_back(w.suspensionFrequency);
    }
    return genes;
}

CarGenome from_genes(std::span<const double> genes, const DesignConfig& config)
{
    const auto dim = static_cast<std::size_t>(genome_dimension(config.nv, config.nw));
    if (genes.size() != dim)
        throw ValidationError("gene count " + std::to_string(genes.size()) + " does not match D = " +
                              std::to_string(dim));
    CarGenome g;
    g.bodyMass = genes[0];
    g.vertexRadii.assign(genes.begin() + 1, genes.begin() + 1 + config.nv);
    std::size_t k = 1 + static_cast<std::size_t>(config.nv);
    g.wheels.resize(static_cast<std::size_t>(config.nw));
    for (auto& w : g.wheels) {
        w.vertexGene = genes[k++];
        w.radius = genes[k++];
        w.mass = genes[k++];
        w.motorTargetSpeed = genes[k++];
        w.suspensionFrequency = genes[k++];
    }
    return g;
}

void validate(const CarGenome& genome, const DesignConfig& config)
{
    config.validate();
    if (genome.nv() != config.nv || genome.nw() != config.nw)
        throw ValidationError("genome shape does not match config (nv, nw)");
    const auto genes = to_genes(genome);
    const auto bounds = gene_intervals(config);
    for (std::size_t i = 0; i < genes.size(); ++i) {
        if (!std::isfinite(genes[i]) || !bounds[i].contains(genes[i]))
            throw ValidationError("gene " + std::to_string(i) + " = " + to_text(genes[i]) +
                                  " outside [" + to_text(bounds[i].lo) + ", " + to_text(bounds[i].hi) + "]");
    }
    for (const auto& w : genome.wheels)
        if (w.vertexGene >= config.nv + 1)
            throw ValidationError("wheel vertex gene must be below nv + 1");
}

bool is_valid(const CarGenome& genome, const DesignConfig& config)
{
    try {
        validate(genome, config);
        return true;
    }
    catch (const ValidationError&) {
        return false;
    }
}

CarBlueprint decode(const CarGenome& genome, const DesignConfig& config)
{
    validate(genome, config);
    CarBlueprint bp;
    const int nv = config.nv;
    bp.polygon.reserve(static_cast<std::size_t>(nv));
    for (int i = 1; i <= nv; ++i) {
        const double phi = vertex_angle(i, nv) * std::numbers::pi / 180.0;
        const double r = genome.vertexRadii[static_cast<std::size_t>(i - 1)];
        bp.polygon.push_back({r * std::cos(phi), r * std::sin(phi)});
    }

    // Triangle fan from the polar origin; the radial polygon is star-shaped about it.
    double area2 = 0.0;   // twice the signed area
    Vec2 firstMoment;     // 6 A c
    double secondMoment = 0.0;  // 12 I_origin / density, signed like area
    for (int i = 0; i < nv; ++i) {
        const Vec2 a = bp.polygon[static_cast<std::size_t>(i)];
        const Vec2 b = bp.polygon[static_cast<std::size_t>((i + 1) % nv)];
        const double c = cross(a, b);
        area2 += c;
        firstMoment += c * (a + b);
        secondMoment += c * (dot(a, a) + dot(a, b) + dot(b, b));
    }
    const double area = 0.5 * area2;
    bp.bodyMass = genome.bodyMass;
    bp.bodyCentroid = (1.0 / (6.0 * area)) * firstMoment;
    const double inertiaOrigin = genome.bodyMass * (secondMoment / 12.0) / area;
    bp.bodyInertia = inertiaOrigin - genome.bodyMass * dot(bp.bodyCentroid, bp.bodyCentroid);

    double totalMass = genome.bodyMass;
    Vec2 weighted = genome.bodyMass * bp.bodyCentroid;
    for (const auto& w : genome.wheels) {
        const Vec2 pos = bp.polygon[static_cast<std::size_t>(w.vertex_index() - 1)];
        bp.wheelMounts.push_back({pos, w});
        weighted += w.mass * pos;
        totalMass += w.mass;
    }
    bp.centerOfMass = (1.0 / totalMass) * weighted;
    return bp;
}

CarGenome random_genome(Rng& rng, const DesignConfig& config)
{
    config.validate();
    const auto bounds = gene_intervals(config);
    std::vector<double> genes(bounds.size());
    for (std::size_t i = 0; i < bounds.size(); ++i)
        genes[i] = rng.uniform(bounds[i].lo, bounds[i].hi);
    return from_genes(genes, config);
}

CarGenome mutate(const CarGenome& genome, Rng& rng, const DesignConfig& config, const MutationParams& params)
{
    validate(genome, config);
    auto genes = to_genes(genome);
    const auto bounds = gene_intervals(config);
    const double rate = params.rate.value_or(1.0 / static_cast<double>(genes.size()));
    const std::size_t firstWheelGene = 1 + static_cast<std::size_t>(config.nv);
    for (std::size_t i = 0; i < genes.size(); ++i) {
        if (rng.uniform() >= rate)
            continue;
        const double sigma = params.scale * bounds[i].width();
        const bool vertexGene = i >= firstWheelGene && (i - firstWheelGene) % 5 == 0;
        genes[i] = clamp_gene(genes[i] + sigma * rng.normal(), bounds[i], vertexGene);
    }
    return from_genes(genes, config);
}

CarGenome crossover(const CarGenome& a, const CarGenome& b, Rng& rng, const DesignConfig& config)
{
    validate(a, config);
    validate(b, config);
    auto genes = to_genes(a);
    const auto other = to_genes(b);
    for (std::size_t i = 0; i < genes.size(); ++i)
        if (rng.coin())
            genes[i] = other[i];
    return from_genes(genes, config);
}

void write_design(std::ostream& out, const CarGenome& genome, const DesignConfig& config)
{
    validate(genome, config);
    const auto& b = config.bounds;
    auto bound = [&out](const char* name, const Interval& iv) {
        out << name << ' ' << to_text(iv.lo) << ' ' << to_text(iv.hi) << '\n';
    };
    out << kDesignMagic << ' ' << kDesignVersion << '\n';
    out << "nv " << config.nv << '\n';
    out << "nw " << config.nw << '\n';
    out << "course " << to_string(config.courseId) << '\n';
    bound("bodyMass", b.bodyMass);
    bound("vertexRadius", b.vertexRadius);
    bound("wheelRadius", b.wheelRadius);
    bound("wheelMass", b.wheelMass);
    bound("motorTargetSpeed", b.motorTargetSpeed);
    bound("suspensionFrequency", b.suspensionFrequency);
    const auto genes = to_genes(genome);
    out << "genes " << genes.size() << '\n';
    for (double g : genes)
        out << to_text(g) << '\n';
}

DesignFile read_design(std::istream& in)
{
    std::string line;
    std::size_t lineNo = 0;
    auto next = [&]() -> std::istringstream {
        while (std::getline(in, line)) {
            ++lineNo;
            if (!line.empty() && line[0] != '#')
                return std::istringstream(line);
        }
        throw ParseError("design file truncated", lineNo);
    };
    auto expectKey = [&](std::istringstream& ls, std::string_view key) {
        std::string k;
        ls >> k;
        if (k != key)
            throw ParseError("expected '" + std::string(key) + "', got '" + k + "'", lineNo);
    };
    auto word = [&](std::istringstream& ls) {
        std::string w;
        if (!(ls >> w))
            throw ParseError("missing value", lineNo);
        return w;
    };

    DesignFile df;
    {
        auto ls = next();
        expectKey(ls, kDesignMagic);
        if (parse_int(word(ls)) != kDesignVersion)
            throw VersionError("unsupported design file version");
    }
    {
        auto ls = next();
        expectKey(ls, "nv");
        df.config.nv = static_cast<int>(parse_int(word(ls)));
    }
    {
        auto ls = next();
        expectKey(ls, "nw");
        df.config.nw = static_cast<int>(parse_int(word(ls)));
    }
    {
        auto ls = next();
        expectKey(ls, "course");
        df.config.courseId = parse_course_id(word(ls));
    }
    auto& b = df.config.bounds;
    for (auto [name, iv] : {std::pair<const char*, Interval*>{"bodyMass", &b.bodyMass},
                            {"vertexRadius", &b.vertexRadius},
                            {"wheelRadius", &b.wheelRadius},
                            {"wheelMass", &b.wheelMass},
                            {"motorTargetSpeed", &b.motorTargetSpeed},
                            {"suspensionFrequency", &b.suspensionFrequency}}) {
        auto ls = next();
        expectKey(ls, name);
        iv->lo = parse_double(word(ls));
        iv->hi = parse_double(word(ls));
    }
    df.config.validate();
    std::size_t count = 0;
    {
        auto ls = next();
        expectKey(ls, "genes");
        count = static_cast<std::size_t>(parse_int(word(ls)));
    }
    std::vector<double> genes;
    for (std::size_t i = 0; i < count; ++i) {
        auto ls = next();
        genes.push_back(parse_double(word(ls)));
    }
    df.genome = from_genes(genes, df.config);
    validate(df.genome, df.config);
    return df;
}

} // namespace cardesign
