#pragma once

#include "way/core.hpp"
#include "way/fock.hpp"
#include "way/resource.hpp"
#include "way/discrimination.hpp"
#include "way/circuits.hpp"
#include "way/models.hpp"
#include "way/io.hpp"
