#include <stdint.h>

/* Leading zeros of the low four bits of x; 4 when they are all zero. */
uint8_t lzc4(uint8_t x)
{
    x &= 0xF;
    if (x & 0x8) return 0;
    if (x & 0x4) return 1;
    if (x & 0x2) return 2;
    if (x & 0x1) return 3;
    return 4;
}
