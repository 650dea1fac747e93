const { Builder, By } = require('selenium-webdriver')

describe('todo list', function () {
  let driver

  before(async function () {
    driver = await new Builder().forBrowser('firefox').build()
  })

  it('adds an item', async function () {
    await driver.get('http://localhost:8080')
    await driver.findElement(By.css('.new-todo')).sendKeys('milk\n')
    const items = await driver.findElements(By.css('.todo-list li'))
    expect(items.length).toBe(1)
  })

  it('clears completed', async function () {
    await driver.findElement(By.css('.toggle')).click()
    await driver.findElement(By.css('.clear-completed')).click()
    ;[1, 2].forEach((n) => console.log(n))
    const left = await driver.findElement(By.css('.todo-count')).getText()
    expect(left).toContain('0')
  })
})
