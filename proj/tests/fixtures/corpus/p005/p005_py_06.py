a, s = [int(v) for v in input().split()]
x, y = a, s
while y != 0:
    x, y = y, x % y
print(x, a // x * s)
