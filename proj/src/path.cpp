#include "crm/path.hpp"

#include <algorithm>
#include <cmath>

#include "crm/error.hpp"

namespace crm {

PathComponent::PathComponent(std::vector<PathPiece> pieces)
    : pieces_(std::move(pieces)) {
  std::sort(pieces_.begin(), pieces_.end(),
            [](const PathPiece& a, const PathPiece& b) {
              return a.from < b.from;
            });
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    if (!(p.from < p.to) || !std::isfinite(p.from)) {
      throw DomainError("path piece has an empty or invalid range");
    }
    if (!std::isfinite(p.intercept) || !std::isfinite(p.slope)) {
      throw DomainError("path piece has non-finite coefficients");
    }
    if (i > 0 && p.from < pieces_[i - 1].to) {
      throw DomainError("path pieces overlap");
    }
  }
}

double PathComponent::operator()(double z) const {
  // Last piece whose start is <= z.
  auto it = std::upper_bound(
      pieces_.begin(), pieces_.end(), z,
      [](double v, const PathPiece& p) { return v < p.from; });
  if (it == pieces_.begin()) return std::numeric_limits<double>::quiet_NaN();
  --it;
  if (!(z < it->to)) return std::numeric_limits<double>::quiet_NaN();
  return it->intercept + it->slope * z;
}

ParameterPath::ParameterPath(std::vector<PathComponent> components,
                             std::vector<PathAtom> atoms)
    : components_(std::move(components)), atoms_(std::move(atoms)) {
  for (const auto& a : atoms_) {
    if (a.value.size() != components_.size()) {
      throw DomainError("path atom has the wrong dimension");
    }
  }
  std::sort(atoms_.begin(), atoms_.end(),
            [](const PathAtom& a, const PathAtom& b) { return a.at < b.at; });
}

ParameterPath ParameterPath::constant(const Params& value) {
  std::vector<PathComponent> comps;
  for (double v : value) {
    comps.emplace_back(std::vector<PathPiece>{{0.0, INFINITY, v, 0.0}});
  }
  return ParameterPath(std::move(comps));
}

Params ParameterPath::operator()(double z) const {
  for (const auto& a : atoms_) {
    if (a.at == z) return a.value;
  }
  Params out(components_.size());
  for (std::size_t j = 0; j < components_.size(); ++j) {
    out[j] = components_[j](z);
  }
  return out;
}

ParameterPath ParameterPath::with_atom(double at, Params value) const {
  ParameterPath copy = *this;
  std::erase_if(copy.atoms_, [&](const PathAtom& a) { return a.at == at; });
  copy.atoms_.push_back({at, std::move(value)});
  return ParameterPath(copy.components_, copy.atoms_);
}

std::vector<double> ParameterPath::breakpoints() const {
  std::vector<double> out;
  for (const auto& c : components_) {
    for (const auto& p : c.pieces()) {
      out.push_back(p.from);
      if (std::isfinite(p.to)) out.push_back(p.to);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool ParameterPath::operator==(const ParameterPath& other) const {
  if (components_.size() != other.components_.size()) return false;
  if (atoms_.size() != other.atoms_.size()) return false;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].at != other.atoms_[i].at ||
        atoms_[i].value != other.atoms_[i].value) {
      return false;
    }
  }
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const auto& a = components_[j].pieces();
    const auto& b = other.components_[j].pieces();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].from != b[i].from || a[i].to != b[i].to ||
          a[i].intercept != b[i].intercept || a[i].slope != b[i].slope) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace crm
