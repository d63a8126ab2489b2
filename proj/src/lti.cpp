#include "netid/lti.hpp"

#include <random>

namespace netid {

std::string to_string(Minimality m) {
    switch (m) {
        case Minimality::Minimal: return "minimal";
        case Minimality::Unreachable: return "unreachable";
        case Minimality::Unobservable: return "unobservable";
        case Minimality::Both: return "both";
    }
    return "minimal";
}

InputSpec::Kind input_kind_from_string(const std::string& s) {
    if (s == "bipolar" || s == "piecewise_constant_bipolar") return InputSpec::Kind::PiecewiseConstantBipolar;
    if (s == "gaussian") return InputSpec::Kind::Gaussian;
    if (s == "zero") return InputSpec::Kind::Zero;
    throw ConfigError("unknown input kind '" + s + "'");
}

std::string to_string(InputSpec::Kind k) {
    switch (k) {
        case InputSpec::Kind::PiecewiseConstantBipolar: return "bipolar";
        case InputSpec::Kind::Gaussian: return "gaussian";
        case InputSpec::Kind::Zero: return "zero";
    }
    return "zero";
}

Eigen::MatrixXd generate_input(const InputSpec& spec, Eigen::Index width) {
    if (spec.length < 1) throw ConfigError("generate_input: length must be >= 1");
    if (width < 0) throw ConfigError("generate_input: negative width");
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(width, spec.length);
    std::mt19937_64 rng(spec.seed);
    switch (spec.kind) {
        case InputSpec::Kind::Zero:
            break;
        case InputSpec::Kind::Gaussian: {
            std::normal_distribution<double> normal(0.0, 1.0);
            for (Eigen::Index k = 0; k < spec.length; ++k)
                for (Eigen::Index i = 0; i < width; ++i) u(i, k) = normal(rng);
            break;
        }
        case InputSpec::Kind::PiecewiseConstantBipolar: {
            if (spec.hold < 1) throw ConfigError("generate_input: hold must be >= 1");
            std::bernoulli_distribution coin(0.5);
            for (Eigen::Index start = 0; start < spec.length; start += spec.hold) {
                const Eigen::Index len = std::min(spec.hold, spec.length - start);
                for (Eigen::Index i = 0; i < width; ++i) {
                    u.row(i).segment(start, len).setConstant(coin(rng) ? 1.0 : -1.0);
                }
            }
            break;
        }
    }
    return u;
}

}  // namespace netid
