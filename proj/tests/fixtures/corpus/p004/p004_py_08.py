import sys
count = int(sys.stdin.readline())
values = [0] * (count + 2)
values[1] = 1
for k in range(2, count + 1):
    values[k] = values[k - 1] + values[k - 2]
print(values[count])
