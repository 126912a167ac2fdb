#pragma once

#include "kmgl/error.hpp"

#include <doctest.h>

#include <functional>

namespace testutil {

/// Kind of the kmgl::Error thrown by `f`; fails the test if nothing is thrown.
inline kmgl::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const kmgl::Error& e) {
    return e.kind();
  }
  FAIL("expected kmgl::Error");
  return kmgl::ErrorKind::InternalConsistency;
}

}  // namespace testutil
