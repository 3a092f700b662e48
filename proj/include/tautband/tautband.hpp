#pragma once

#include "tautband/extrema.hpp"
#include "tautband/io.hpp"
#include "tautband/oracle.hpp"
#include "tautband/parallel.hpp"
#include "tautband/path.hpp"
#include "tautband/renewal.hpp"
#include "tautband/rng.hpp"
#include "tautband/stats.hpp"
#include "tautband/taut_string.hpp"
