//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/errors.hpp
//---------------------------------------------------------------------------//
#pragma once

#include <stdexcept>
#include <string>

namespace tbdyn
{
//! Invalid input to a model or analysis routine.
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

//! A numerical procedure could not produce a trustworthy result.
class NumericError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Closed-form expression evaluated at a pole.
class SingularityError : public NumericError
{
  public:
    using NumericError::NumericError;
};

//! Two independent routes to the same quantity disagree.
class ConsistencyError : public NumericError
{
  public:
    using NumericError::NumericError;
};

//! Stochastic step produced a non-finite state.
class StepOverflow : public NumericError
{
  public:
    using NumericError::NumericError;
};

}  // namespace tbdyn
