#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hqlab {

/// Input outside the domain of a function (e.g. a spectrum outside the
/// positive cone).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed argument: bad index, shape mismatch, non-Hermitian input.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A grid site where some pointwise requirement failed.
class SiteError : public std::runtime_error {
 public:
  SiteError(const std::string& what, std::size_t site)
      : std::runtime_error(what + " (site " + std::to_string(site) + ")"),
        site_(site) {}

  std::size_t site() const noexcept { return site_; }

 private:
  std::size_t site_;
};

/// chi_u is not positive at some site.
class NonAdmissibleError : public SiteError {
 public:
  using SiteError::SiteError;
};

/// A metric that should be positive definite is not.
class NotPositiveDefiniteError : public SiteError {
 public:
  using SiteError::SiteError;
};

}  // namespace hqlab
