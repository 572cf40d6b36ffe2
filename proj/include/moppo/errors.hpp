#pragma once

#include <stdexcept>
#include <string>

namespace moppo {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// -- weight space --

/// A scalarisation vector failed validation (negative component, wrong sum, m < 2).
class InvalidWeights : public Error { using Error::Error; };
/// The grid step does not divide 1 (or step2 does not divide step1) within tolerance.
class NonDivisibleStep : public Error { using Error::Error; };
/// A pivot mode produced a different count than the configured K.
class PivotCountMismatch : public Error { using Error::Error; };
/// The fine grid has fewer points than the requested candidate count.
class InsufficientGrid : public Error { using Error::Error; };

// -- environments --

/// No environment registered under the requested name.
class UnknownEnvironment : public Error { using Error::Error; };
/// step() was called on an episode that already reached a terminal state.
class EpisodeFinished : public Error { using Error::Error; };
/// An action had the wrong dimension or non-finite components.
class InvalidAction : public Error { using Error::Error; };

// -- neural --

/// Tensor or vector dimensions disagree with the network layout.
class ShapeMismatch : public Error { using Error::Error; };
/// A forward cache does not match the network it is used with.
class StaleCache : public Error { using Error::Error; };
/// NaN or Inf appeared in a forward pass.
class NonFiniteParameters : public Error { using Error::Error; };
/// A checkpoint file is unreadable or inconsistent with its header.
class CorruptCheckpoint : public Error { using Error::Error; };

// -- metrics --

/// An operation that needs at least one point received an empty front.
class EmptyFront : public Error { using Error::Error; };
/// Exact hypervolume is implemented for two and three objectives only.
class DimensionUnsupported : public Error { using Error::Error; };
/// Sparsity needs at least two points.
class FrontTooSmall : public Error { using Error::Error; };
/// Objective vectors of different lengths were mixed.
class DimensionMismatch : public Error { using Error::Error; };

// -- surrogate --

/// Two evaluation snapshots do not cover the same weight vectors.
class KeyMismatch : public Error { using Error::Error; };
/// A regression fit needs at least two rows.
class InsufficientData : public Error { using Error::Error; };

// -- acquisition --

/// The exploration schedule is defined for stage indices >= 1.
class InvalidStage : public Error { using Error::Error; };
/// Prediction was requested before the ensembles were fitted.
class UnfittedSurrogate : public Error { using Error::Error; };
/// Selection from an empty candidate list.
class EmptyCandidates : public Error { using Error::Error; };

// -- orchestrator / cli --

/// Unrecognised training variant name.
class UnknownVariant : public Error { using Error::Error; };
/// Configuration file or CLI arguments are invalid.
class ConfigError : public Error { using Error::Error; };

} // namespace moppo
