// Umbrella header for the cavity-feedback simulation library.
#pragma once

#include "cavfb/fock.hpp"
#include "cavfb/liouville.hpp"
#include "cavfb/mcwf.hpp"
#include "cavfb/parallel.hpp"
#include "cavfb/qubit.hpp"
#include "cavfb/run.hpp"
#include "cavfb/stirap.hpp"
#include "cavfb/types.hpp"
