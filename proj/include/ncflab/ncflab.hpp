#pragma once

#include "ncflab/config.hpp"
#include "ncflab/cutoffs.hpp"
#include "ncflab/error.hpp"
#include "ncflab/experiments.hpp"
#include "ncflab/fft.hpp"
#include "ncflab/interp.hpp"
#include "ncflab/io.hpp"
#include "ncflab/kakeya.hpp"
#include "ncflab/multilab.hpp"
#include "ncflab/ncmat.hpp"
#include "ncflab/optorus.hpp"
#include "ncflab/qtorus.hpp"
#include "ncflab/sqmax.hpp"
#include "ncflab/version.hpp"
