#include <stdbool.h>
#include <stdint.h>

static uint32_t shiftRightJam32(uint32_t a, uint_fast16_t dist)
{
    return (dist < 31) ? a >> dist | ((uint32_t)(a << (-dist & 31)) != 0) : (a != 0);
}

static uint16_t packToF16(bool sign, int_fast16_t exp, uint_fast16_t sig)
{
    return (uint16_t)(((uint16_t)sign << 15) + ((uint16_t)exp << 10) + sig);
}

uint16_t roundPackToF16(bool sign, int_fast16_t exp, uint_fast16_t sig)
{
    uint_fast8_t roundBits = sig & 0xF;
    if (0x1D <= (unsigned int)exp) {
        if (exp < 0) {
            sig = shiftRightJam32(sig, -exp);
            exp = 0;
            roundBits = sig & 0xF;
        } else if ((0x1D < exp) || (0x8000 <= sig + 0x8)) {
            return packToF16(sign, 0x1F, 0);
        }
    }
    sig = (sig + 0x8) >> 4;
    sig &= ~(uint_fast16_t)((roundBits ^ 8) == 0);
    if (!sig) {
        exp = 0;
    }
    return packToF16(sign, exp, sig);
}
