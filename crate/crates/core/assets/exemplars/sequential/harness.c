#include <assert.h>
#include <stdint.h>

#define TIMEFRAME 2

struct module_mul8_pipe {
    _Bool clk;
    uint8_t a;
    uint8_t b;
    uint16_t result;
};
extern struct module_mul8_pipe rtl;

void next_timeframe(void);
uint16_t mul8_pipe(uint8_t a, uint8_t b);

int main(void)
{
    uint8_t a, b;
    __CPROVER_assume(rtl.a == a && rtl.b == b);
    for (int cycle = 0; cycle < TIMEFRAME; cycle++)
        next_timeframe();
    uint16_t c_result = mul8_pipe(a, b);
    assert(c_result == rtl.result);
    return 0;
}
