#include <stdint.h>

uint8_t add_sat(uint8_t a, uint8_t b);

uint8_t sum3(uint8_t a, uint8_t b, uint8_t c)
{
    return add_sat(add_sat(a, b), c);
}
