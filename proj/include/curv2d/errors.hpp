#pragma once

#include <stdexcept>
#include <string>

namespace curv2d {

enum class Errc {
    syntax_error = 1,
    unknown_identifier,
    domain_error,
    unknown_family,
    singular_basis,
    non_convex,
    no_root,
    derivative_unavailable,
    verticality_violated,
    evaluation_failed,
    step_underflow,
    chart_singular,
    newton_failed,
    root_failed,
    non_positive_argument,
    wrong_family,
    inversion_failed,
    no_convergence,
    io_error,
    invalid_argument,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

  private:
    Errc code_;
};

}  // namespace curv2d
