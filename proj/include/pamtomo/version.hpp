#pragma once

#define PAMTOMO_VERSION "1.0.0"
