// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rtao/acousto.hpp"
#include "rtao/decomposition.hpp"
#include "rtao/field.hpp"
#include "rtao/geometry.hpp"
#include "rtao/harness.hpp"
#include "rtao/media.hpp"
#include "rtao/reconstruct.hpp"
#include "rtao/transport.hpp"
#include "rtao/util.hpp"
