#include "ofmpc/grnn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ofmpc {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

constexpr std::size_t kNoSkip = std::numeric_limits<std::size_t>::max();

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

Error parse_error(std::size_t line, const std::string& what) {
    return Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& token, std::size_t line) {
    double value = 0.0;
    const auto* begin = token.data();
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw parse_error(line, "not a finite number: '" + token + "'");
    }
    return value;
}

// Reads "key=value" pairs out of a comment body.
void parse_directives(const std::string& body, std::size_t line, SampleFile& file,
                      bool& have_dims) {
    std::istringstream words(body);
    std::string word;
    while (words >> word) {
        const auto eq = word.find('=');
        if (eq == std::string::npos) {
            continue;
        }
        const std::string key = word.substr(0, eq);
        const std::string value = word.substr(eq + 1);
        if (key == "nz") {
            file.nz = static_cast<std::size_t>(parse_number(value, line));
            have_dims = true;
        } else if (key == "nd") {
            file.nd = static_cast<std::size_t>(parse_number(value, line));
        } else if (key == "sigma") {
            file.sigma = parse_number(value, line);
        } else if (key == "capacity") {
            file.capacity = static_cast<std::size_t>(parse_number(value, line));
        }
    }
}

} // namespace

GrnnModel::GrnnModel(std::size_t nz, std::size_t nd, std::size_t capacity, double sigma)
    : nz_(nz), nd_(nd), capacity_(capacity), sigma_(sigma) {
    if (nz == 0 || nd == 0) {
        throw Error(ErrorCode::DimensionMismatch, "GRNN needs at least one input and one output");
    }
    if (capacity == 0) {
        throw Error(ErrorCode::PreconditionViolated, "GRNN capacity must be positive");
    }
    set_sigma(sigma);
    mean_ = Vector::Zero(idx(nz));
    spread_ = Vector::Ones(idx(nz));
}

void GrnnModel::set_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::PreconditionViolated, "sigma must be positive and finite");
    }
    sigma_ = sigma;
}

void GrnnModel::add_sample(const Vector& r, const Vector& d) {
    if (r.size() != idx(nz_) || d.size() != idx(nd_)) {
        throw Error(ErrorCode::DimensionMismatch, "sample has wrong dimensions");
    }
    if (!r.allFinite() || !d.allFinite()) {
        throw Error(ErrorCode::PreconditionViolated, "sample must be finite");
    }
    samples_.push_back({r, d});
    while (samples_.size() > capacity_) {
        samples_.pop_front();
    }
    rescale();
}

void GrnnModel::rescale() {
    const auto n = static_cast<double>(samples_.size());
    mean_ = Vector::Zero(idx(nz_));
    for (const auto& s : samples_) {
        mean_ += s.input;
    }
    mean_ /= n;
    Vector var = Vector::Zero(idx(nz_));
    for (const auto& s : samples_) {
        var += (s.input - mean_).cwiseAbs2();
    }
    var /= n;
    spread_ = var.cwiseSqrt();
    for (Eigen::Index i = 0; i < spread_.size(); ++i) {
        if (!(spread_(i) > 1e-12 * (1.0 + std::abs(mean_(i))))) {
            spread_(i) = 1.0;
        }
    }
    normalized_.clear();
    for (const auto& s : samples_) {
        normalized_.push_back(normalize(s.input));
    }
}

Vector GrnnModel::normalize(const Vector& r) const {
    return (r - mean_).cwiseQuotient(spread_);
}

Vector GrnnModel::weighted_average(const Vector& z, std::size_t skip, double sigma) const {
    // Log-sum-exp: shift exponents by the nearest sample so the largest weight is 1.
    std::vector<double> expo(samples_.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples_.size(); ++s) {
        if (s == skip) {
            continue;
        }
        expo[s] = (z - normalized_[s]).squaredNorm() / (2.0 * sigma * sigma);
        best = std::min(best, expo[s]);
    }
    Vector num = Vector::Zero(idx(nd_));
    double den = 0.0;
    for (std::size_t s = 0; s < samples_.size(); ++s) {
        if (s == skip) {
            continue;
        }
        const double w = std::exp(best - expo[s]);
        num += w * samples_[s].output;
        den += w;
    }
    return den > 0.0 ? Vector(num / den) : Vector(Vector::Zero(idx(nd_)));
}

Vector GrnnModel::predict(const Vector& r) const {
    if (r.size() != idx(nz_)) {
        throw Error(ErrorCode::DimensionMismatch, "query has wrong dimension");
    }
    if (samples_.empty()) {
        return Vector::Zero(idx(nd_));
    }
    return weighted_average(normalize(r), kNoSkip, sigma_);
}

Vector GrnnModel::predict_excluding(const Vector& r, std::size_t skip, double sigma) const {
    if (r.size() != idx(nz_)) {
        throw Error(ErrorCode::DimensionMismatch, "query has wrong dimension");
    }
    return weighted_average(normalize(r), skip, sigma);
}

GrnnModel add_sample(GrnnModel model, const Vector& r, const Vector& d) {
    model.add_sample(r, d);
    return model;
}

std::vector<double> default_sigma_grid() {
    std::vector<double> grid;
    constexpr int kPoints = 61;
    for (int i = 0; i < kPoints; ++i) {
        grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / (kPoints - 1)));
    }
    return grid;
}

double loo_error(const GrnnModel& model, double sigma) {
    const auto& samples = model.samples();
    if (samples.size() < 2) {
        throw Error(ErrorCode::InsufficientData, "leave-one-out needs at least two samples");
    }
    double total = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vector pred = model.predict_excluding(samples[s].input, s, sigma);
        total += (pred - samples[s].output).squaredNorm();
    }
    return total / static_cast<double>(samples.size());
}

SigmaSelection select_sigma(const GrnnModel& model, const std::vector<double>& grid) {
    if (model.size() < 2) {
        throw Error(ErrorCode::InsufficientData,
                    "sigma selection needs at least two samples, have " +
                        std::to_string(model.size()));
    }
    if (grid.empty()) {
        throw Error(ErrorCode::PreconditionViolated, "sigma grid is empty");
    }
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    SigmaSelection out;
    out.grid = sorted;
    for (const double sigma : sorted) {
        out.errors.push_back(loo_error(model, sigma));
    }
    const double best = *std::min_element(out.errors.begin(), out.errors.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (out.errors[i] <= best * (1.0 + 1e-12)) {
            out.sigma = sorted[i];
            out.error = out.errors[i];
            break;
        }
    }
    return out;
}

void write_samples(std::ostream& out, const GrnnModel& model, bool with_sigma) {
    out << "# nz=" << model.nz() << " nd=" << model.nd() << '\n';
    if (with_sigma) {
        out << "# sigma=" << std::setprecision(17) << model.sigma()
            << " capacity=" << model.capacity() << '\n';
    }
    out << std::setprecision(17);
    for (const auto& s : model.samples()) {
        for (Eigen::Index i = 0; i < s.input.size(); ++i) {
            out << s.input(i) << ' ';
        }
        for (Eigen::Index i = 0; i < s.output.size(); ++i) {
            out << s.output(i) << (i + 1 < s.output.size() ? " " : "");
        }
        out << '\n';
    }
}

SampleFile read_samples(std::istream& in, std::optional<std::size_t> nz_hint) {
    SampleFile file;
    bool have_dims = false;
    std::vector<std::pair<std::size_t, std::vector<double>>> rows;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string text = raw;
        const auto hash = text.find('#');
        if (hash != std::string::npos) {
            parse_directives(text.substr(hash + 1), line, file, have_dims);
            text = text.substr(0, hash);
        }
        text = trim(text);
        if (text.empty()) {
            continue;
        }
        std::istringstream tokens(text);
        std::vector<double> values;
        std::string token;
        while (tokens >> token) {
            values.push_back(parse_number(token, line));
        }
        rows.emplace_back(line, std::move(values));
    }
    if (rows.empty()) {
        throw Error(ErrorCode::ParseError, "no sample lines found");
    }
    const std::size_t width = rows.front().second.size();
    if (!have_dims) {
        if (!nz_hint) {
            throw Error(ErrorCode::ParseError,
                        "missing '# nz=<n> nd=<n>' directive and no input dimension given");
        }
        file.nz = *nz_hint;
        file.nd = width > file.nz ? width - file.nz : 0;
    }
    if (file.nz == 0 || file.nd == 0) {
        throw Error(ErrorCode::ParseError, "sample dimensions must be positive");
    }
    for (const auto& [number, values] : rows) {
        if (values.size() != file.nz + file.nd) {
            throw parse_error(number, "expected " + std::to_string(file.nz + file.nd) +
                                          " columns, found " + std::to_string(values.size()));
        }
        GrnnSample s{Vector(idx(file.nz)), Vector(idx(file.nd))};
        for (std::size_t i = 0; i < file.nz; ++i) {
            s.input(idx(i)) = values[i];
        }
        for (std::size_t i = 0; i < file.nd; ++i) {
            s.output(idx(i)) = values[file.nz + i];
        }
        file.samples.push_back(std::move(s));
    }
    return file;
}

GrnnModel model_from_file(const SampleFile& file) {
    const std::size_t capacity = file.capacity.value_or(std::max<std::size_t>(file.samples.size(), 1));
    GrnnModel model(file.nz, file.nd, capacity, file.sigma.value_or(GrnnModel::kDefaultSigma));
    for (const auto& s : file.samples) {
        model.add_sample(s.input, s.output);
    }
    return model;
}

} // namespace ofmpc
